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

// Gated-attention MIL with one attention branch per class.
//
//   h_i   = relu(x_i W_p + b_p)                          [H]
//   s_c,i = w_c^T (tanh(V_c h_i + b_V) * sigmoid(U_c h_i + b_U))
//   a_c   = softmax_i(s_c)
//   z_c   = sum_i a_c,i h_i
//   logit_c = z_c . u_c + b_c
//
// Parameter names: proj.w [D,H], proj.b [H]; attn{c}.V / attn{c}.U [H,L],
// attn{c}.Vb / attn{c}.Ub [L], attn{c}.w [L,1]; cls{c}.w [H,1], cls{c}.b [1].

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "weakmil/features.hpp"
#include "weakmil/param_set.hpp"
#include "weakmil/random.hpp"

namespace weakmil::mil {

inline constexpr std::size_t kClasses = 2;

struct MilHyper {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  std::size_t epochs = 100;
  std::size_t hidden = 128;
  std::size_t attention = 64;
  /// Heavy-ball momentum of the per-bag SGD steps.
  double momentum = 0.9;
  std::vector<double> lr_grid = {1e-3, 1e-4, 1e-5};
  std::vector<double> wd_grid = {1e-3, 1e-5};

  void Validate() const;
};

ParamSet InitMil(std::size_t feature_dim, const MilHyper& hyper, Rng& rng);

struct MilOutput {
  std::array<double, kClasses> logits{};
  /// softmax(logits)[1].
  double positive_probability = 0.0;
  /// Per class, per patch; each sums to 1.
  std::array<std::vector<double>, kClasses> attention;
  /// Pre-softmax scores s_c,i.
  std::array<std::vector<double>, kClasses> raw_scores;
  /// Pooled embeddings z_c.
  std::array<std::vector<double>, kClasses> embeddings;
};

/// Forward pass over a bag of features [N, D].
MilOutput MilForward(const ParamSet& model, const Tensor& features);
inline MilOutput MilForward(const ParamSet& model, const FeatureBag& bag) {
  return MilForward(model, bag.features);
}

/// Cross entropy of the slide logits against `label`; fills `grads` when
/// non-null.
double MilLoss(const ParamSet& model, const Tensor& features, int label,
               ParamSet* grads);

struct MilTrainResult {
  ParamSet model;
  std::vector<double> epoch_losses;
};

/// One SGD step per bag, bags shuffled every epoch from `seed`. Throws
/// DatasetError unless both labels occur.
MilTrainResult TrainMil(const std::vector<FeatureBag>& bags,
                        const MilHyper& hyper, std::uint64_t seed);

// Max-pooling baseline: a logistic patch classifier (pc.w [D,1], pc.b [1])
// whose slide score is the highest patch probability.

std::vector<double> PatchProbabilities(const ParamSet& patch_classifier,
                                       const Tensor& features);
double MaxPoolScore(const ParamSet& patch_classifier, const Tensor& features);

/// Trains the patch classifier on the top-scoring patch of each bag with the
/// bag label (binary cross entropy), same optimizer settings as TrainMil.
MilTrainResult TrainMaxPool(const std::vector<FeatureBag>& bags,
                            const MilHyper& hyper, std::uint64_t seed);

}  // namespace weakmil::mil
