// Copyright 2026 The weakmil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "weakmil/mil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weakmil/error.hpp"
#include "weakmil/optim.hpp"

namespace weakmil::mil {

namespace {

std::string Attn(std::size_t c, const char* field) {
  return "attn" + std::to_string(c) + "." + field;
}

std::string Cls(std::size_t c, const char* field) {
  return "cls" + std::to_string(c) + "." + field;
}

struct Graph {
  ag::Var logits;  // [1, 2]
  std::array<ag::Var, kClasses> scores;     // [N, 1]
  std::array<ag::Var, kClasses> attention;  // [N, 1]
  std::array<ag::Var, kClasses> pooled;     // [1, H]
};

template <typename Get>
Graph Forward(Get&& p, ag::Var x) {
  Graph g;
  ag::Var h = ag::Relu(ag::AddRowBias(ag::Matmul(x, p("proj.w")), p("proj.b")));
  std::array<ag::Var, kClasses> logit;
  for (std::size_t c = 0; c < kClasses; ++c) {
    ag::Var a = ag::Tanh(ag::AddRowBias(ag::Matmul(h, p(Attn(c, "V"))), p(Attn(c, "Vb"))));
    ag::Var b = ag::Sigmoid(ag::AddRowBias(ag::Matmul(h, p(Attn(c, "U"))), p(Attn(c, "Ub"))));
    g.scores[c] = ag::Matmul(ag::Mul(a, b), p(Attn(c, "w")));
    g.attention[c] = ag::Softmax(g.scores[c], 0);
    g.pooled[c] = ag::Matmul(ag::Transpose(g.attention[c]), h);
    logit[c] = ag::AddRowBias(ag::Matmul(g.pooled[c], p(Cls(c, "w"))), p(Cls(c, "b")));
  }
  g.logits = ag::ConcatCols(logit[0], logit[1]);
  return g;
}

void RequireBag(const Tensor& features) {
  if (features.rank() != 2 || features.dim(0) == 0) {
    throw DimensionError("MIL needs a nonempty [N, D] bag, got " +
                         ShapeString(features.shape()));
  }
}

std::vector<double> Column(const Tensor& t) {
  return std::vector<double>(t.data().begin(), t.data().end());
}

void RequireBothLabels(const std::vector<FeatureBag>& bags) {
  bool seen[2] = {false, false};
  for (const auto& b : bags) {
    if (b.label != 0 && b.label != 1) throw DatasetError("bag labels must be 0 or 1");
    seen[b.label] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw DatasetError("MIL training needs bags of both labels");
  }
}

double Sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

void MilHyper::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("mil.learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("mil.weight_decay must be >= 0");
  if (hidden == 0 || attention == 0) {
    throw ConfigError("mil.hidden and mil.attention must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("mil.momentum must lie in [0, 1)");
  }
  for (double v : lr_grid)
    if (!(v > 0.0)) throw ConfigError("mil.lr_grid entries must be > 0");
  for (double v : wd_grid)
    if (!(v >= 0.0)) throw ConfigError("mil.wd_grid entries must be >= 0");
}

ParamSet InitMil(std::size_t feature_dim, const MilHyper& hyper, Rng& rng) {
  hyper.Validate();
  const std::size_t d = feature_dim, h = hyper.hidden, l = hyper.attention;
  ParamSet p;
  p.Add("proj.w", GlorotUniform({d, h}, d, h, rng));
  p.Add("proj.b", Tensor({h}));
  for (std::size_t c = 0; c < kClasses; ++c) {
    p.Add(Attn(c, "V"), GlorotUniform({h, l}, h, l, rng));
    p.Add(Attn(c, "Vb"), Tensor({l}));
    p.Add(Attn(c, "U"), GlorotUniform({h, l}, h, l, rng));
    p.Add(Attn(c, "Ub"), Tensor({l}));
    p.Add(Attn(c, "w"), GlorotUniform({l, 1}, l, 1, rng));
    p.Add(Cls(c, "w"), GlorotUniform({h, 1}, h, 1, rng));
    p.Add(Cls(c, "b"), Tensor({1}));
  }
  return p;
}

MilOutput MilForward(const ParamSet& model, const Tensor& features) {
  RequireBag(features);
  ag::Tape tape;
  const Graph g = Forward(
      [&](const std::string& name) { return tape.Constant(model.at(name)); },
      tape.Constant(features));
  MilOutput out;
  const Tensor& lg = g.logits.value();
  out.logits = {lg[0], lg[1]};
  out.positive_probability = Softmax(lg.Reshaped({2}))[1];
  for (std::size_t c = 0; c < kClasses; ++c) {
    out.attention[c] = Column(g.attention[c].value());
    out.raw_scores[c] = Column(g.scores[c].value());
    out.embeddings[c] = Column(g.pooled[c].value());
  }
  return out;
}

double MilLoss(const ParamSet& model, const Tensor& features, int label,
               ParamSet* grads) {
  RequireBag(features);
  if (label != 0 && label != 1) throw IndexError("MIL label must be 0 or 1");
  ag::Tape tape;
  BoundParams bound(tape, model);
  const Graph g = Forward([&](const std::string& name) { return bound[name]; },
                          tape.Constant(features));
  const std::size_t labels[1] = {static_cast<std::size_t>(label)};
  ag::Var loss = ag::CrossEntropyRows(g.logits, labels);
  if (grads != nullptr) {
    tape.Backward(loss);
    *grads = bound.Grads();
  }
  return loss.value().item();
}

MilTrainResult TrainMil(const std::vector<FeatureBag>& bags,
                        const MilHyper& hyper, std::uint64_t seed) {
  hyper.Validate();
  RequireBothLabels(bags);
  Rng init(DeriveSeed(seed, "mil-init"));
  MilTrainResult result;
  result.model = InitMil(bags.front().dim(), hyper, init);
  const SgdConfig sgd{hyper.learning_rate, hyper.weight_decay, hyper.momentum};
  ParamSet velocity = result.model.ZerosLike();
  std::vector<std::size_t> order(bags.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(DeriveSeed(seed, "mil-order"), epoch));
    rng.Shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      ParamSet grads;
      const double loss = MilLoss(result.model, bags[i].features, bags[i].label, &grads);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite MIL loss at epoch " +
                           std::to_string(epoch + 1) + " on slide '" +
                           bags[i].slide_id + "'");
      }
      SgdStepInPlace(result.model, grads, sgd, &velocity);
      total += loss;
    }
    result.epoch_losses.push_back(total / static_cast<double>(bags.size()));
  }
  return result;
}

std::vector<double> PatchProbabilities(const ParamSet& patch_classifier,
                                       const Tensor& features) {
  RequireBag(features);
  const Tensor z = Matmul(features, patch_classifier.at("pc.w"));
  const double b = patch_classifier.at("pc.b")[0];
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = Sigmoid(z[i] + b);
  return p;
}

double MaxPoolScore(const ParamSet& patch_classifier, const Tensor& features) {
  const auto p = PatchProbabilities(patch_classifier, features);
  return *std::max_element(p.begin(), p.end());
}

MilTrainResult TrainMaxPool(const std::vector<FeatureBag>& bags,
                            const MilHyper& hyper, std::uint64_t seed) {
  hyper.Validate();
  RequireBothLabels(bags);
  const std::size_t d = bags.front().dim();
  Rng init(DeriveSeed(seed, "maxpool-init"));
  MilTrainResult result;
  result.model.Add("pc.w", GlorotUniform({d, 1}, d, 1, init));
  result.model.Add("pc.b", Tensor({1}));
  const SgdConfig sgd{hyper.learning_rate, hyper.weight_decay, hyper.momentum};
  ParamSet velocity = result.model.ZerosLike();
  std::vector<std::size_t> order(bags.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(DeriveSeed(seed, "maxpool-order"), epoch));
    rng.Shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      const auto& bag = bags[i];
      const auto p = PatchProbabilities(result.model, bag.features);
      const std::size_t top = std::max_element(p.begin(), p.end()) - p.begin();
      const double y = bag.label;
      const double pt = std::clamp(p[top], 1e-12, 1.0 - 1e-12);
      total += -(y * std::log(pt) + (1.0 - y) * std::log(1.0 - pt));
      ParamSet grads = result.model.ZerosLike();
      const double delta = p[top] - y;
      for (std::size_t j = 0; j < d; ++j)
        grads.at("pc.w")[j] = delta * bag.features.at(top, j);
      grads.at("pc.b")[0] = delta;
      SgdStepInPlace(result.model, grads, sgd, &velocity);
    }
    result.epoch_losses.push_back(total / static_cast<double>(bags.size()));
  }
  return result;
}

}  // namespace weakmil::mil
