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

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "weakmil/error.hpp"
#include "weakmil/gradcheck.hpp"
#include "weakmil/mil.hpp"

namespace weakmil::mil {
namespace {

using testing::RandomTensor;

MilHyper SmallHyper() {
  MilHyper h;
  h.hidden = 6;
  h.attention = 4;
  return h;
}

ParamSet RandomModel(std::size_t d, Rng& rng) {
  ParamSet p = InitMil(d, SmallHyper(), rng);
  // Non-zero biases so every parameter is exercised.
  for (auto& [name, t] : p)
    if (name.back() == 'b') t = RandomTensor(t.shape(), rng, 0.3);
  return p;
}

// Loop-level recomputation of the gated attention forward pass.
struct Reference {
  std::array<std::vector<double>, 2> attention;
  std::array<std::vector<double>, 2> z;
  std::array<double, 2> logits{};
};

Reference Recompute(const ParamSet& p, const Tensor& x) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  const std::size_t h = p.at("proj.b").size();
  std::vector<std::vector<double>> hid(n, std::vector<double>(h));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      double s = p.at("proj.b")[j];
      for (std::size_t k = 0; k < d; ++k) s += x.at(i, k) * p.at("proj.w").at(k, j);
      hid[i][j] = std::max(0.0, s);
    }
  Reference r;
  for (int c = 0; c < 2; ++c) {
    const std::string a = "attn" + std::to_string(c) + ".";
    const Tensor &V = p.at(a + "V"), &U = p.at(a + "U"), &w = p.at(a + "w");
    const std::size_t l = w.dim(0);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (std::size_t m = 0; m < l; ++m) {
        double v = p.at(a + "Vb")[m], u = p.at(a + "Ub")[m];
        for (std::size_t j = 0; j < h; ++j) {
          v += hid[i][j] * V.at(j, m);
          u += hid[i][j] * U.at(j, m);
        }
        acc += std::tanh(v) * (1.0 / (1.0 + std::exp(-u))) * w[m];
      }
      s[i] = acc;
    }
    const double mx = *std::max_element(s.begin(), s.end());
    double zsum = 0;
    for (double v : s) zsum += std::exp(v - mx);
    r.attention[c].resize(n);
    r.z[c].assign(h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      r.attention[c][i] = std::exp(s[i] - mx) / zsum;
      for (std::size_t j = 0; j < h; ++j) r.z[c][j] += r.attention[c][i] * hid[i][j];
    }
    const std::string k = "cls" + std::to_string(c) + ".";
    r.logits[c] = p.at(k + "b")[0];
    for (std::size_t j = 0; j < h; ++j) r.logits[c] += r.z[c][j] * p.at(k + "w")[j];
  }
  return r;
}

Tensor Rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  Tensor out({idx.size(), x.dim(1)});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < x.dim(1); ++c) out.at(r, c) = x.at(idx[r], c);
  return out;
}

TEST(Forward, MatchesLoopRecomputation) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet p = RandomModel(5, rng);
    const Tensor x = RandomTensor({1 + rng.Below(9), 5}, rng);
    const MilOutput out = MilForward(p, x);
    const Reference ref = Recompute(p, x);
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(out.logits[c], ref.logits[c], 1e-12);
      for (std::size_t i = 0; i < x.dim(0); ++i)
        EXPECT_NEAR(out.attention[c][i], ref.attention[c][i], 1e-12);
      for (std::size_t j = 0; j < ref.z[c].size(); ++j)
        EXPECT_NEAR(out.embeddings[c][j], ref.z[c][j], 1e-12);
    }
  }
}

TEST(Forward, HandSizedInstance) {
  // N=3, D=2, H=2, L=2 with fixed small parameters.
  ParamSet p;
  p.Add("proj.w", Tensor::Matrix({{0.5, -0.2}, {0.1, 0.3}}));
  p.Add("proj.b", Tensor::Vector({0.05, 0.1}));
  for (int c = 0; c < 2; ++c) {
    const std::string a = "attn" + std::to_string(c) + ".";
    const double s = c ? -1.0 : 1.0;
    p.Add(a + "V", Tensor::Matrix({{0.2 * s, 0.1}, {-0.3, 0.4 * s}}));
    p.Add(a + "Vb", Tensor::Vector({0.0, 0.1}));
    p.Add(a + "U", Tensor::Matrix({{0.3, -0.1 * s}, {0.2, 0.2}}));
    p.Add(a + "Ub", Tensor::Vector({0.1, 0.0}));
    p.Add(a + "w", Tensor::Matrix({{1.0}, {-0.5 * s}}));
    p.Add("cls" + std::to_string(c) + ".w", Tensor::Matrix({{0.7 * s}, {-0.4}}));
    p.Add("cls" + std::to_string(c) + ".b", Tensor::Vector({0.01 * s}));
  }
  const Tensor x = Tensor::Matrix({{1.0, 2.0}, {-1.0, 0.5}, {0.3, -0.7}});
  const MilOutput out = MilForward(p, x);
  const Reference ref = Recompute(p, x);
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out.embeddings[c][j], ref.z[c][j], 1e-12);
}

TEST(Forward, SingletonBagHasUnitAttention) {
  Rng rng(2);
  const MilOutput out = MilForward(RandomModel(4, rng), RandomTensor({1, 4}, rng));
  EXPECT_EQ(out.attention[0], std::vector<double>{1.0});
  EXPECT_EQ(out.attention[1], std::vector<double>{1.0});
}

TEST(Forward, ZeroHeadsGiveEvenOdds) {
  Rng rng(3);
  ParamSet p = RandomModel(4, rng);
  for (int c = 0; c < 2; ++c) {
    p.at("cls" + std::to_string(c) + ".w").Fill(0.0);
    p.at("cls" + std::to_string(c) + ".b").Fill(0.0);
  }
  const MilOutput out = MilForward(p, RandomTensor({5, 4}, rng));
  EXPECT_EQ(out.logits[0], 0.0);
  EXPECT_EQ(out.logits[1], 0.0);
  EXPECT_EQ(out.positive_probability, 0.5);
}

TEST(Invariants, AttentionPermutationAndDuplication) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const ParamSet p = RandomModel(6, rng);
    const std::size_t n = 1 + rng.Below(12);
    const Tensor x = RandomTensor({n, 6}, rng);
    const MilOutput out = MilForward(p, x);
    for (int c = 0; c < 2; ++c) {
      double s = 0;
      for (double a : out.attention[c]) {
        EXPECT_GE(a, 0.0);
        s += a;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.Shuffle(perm);
    const MilOutput permuted = MilForward(p, Rows(x, perm));
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(permuted.logits[c], out.logits[c], 1e-12);
      for (std::size_t i = 0; i < n; ++i)
        EXPECT_NEAR(permuted.attention[c][i], out.attention[c][perm[i]], 1e-12);
    }
    std::vector<std::size_t> twice;
    for (std::size_t i = 0; i < n; ++i) twice.insert(twice.end(), {i, i});
    const MilOutput dup = MilForward(p, Rows(x, twice));
    for (int c = 0; c < 2; ++c) EXPECT_NEAR(dup.logits[c], out.logits[c], 1e-9);
  }
}

TEST(Invariants, LowScoringPatchIsSuppressed) {
  // Identity projection and a single attention unit reading hidden unit 0:
  // s_i = 100 tanh(h_i0 - 1), so rows with h_i0 = 2 score ~76 and a row
  // with h_i0 = 0 scores ~-76.
  MilHyper h;
  h.hidden = 3;
  h.attention = 1;
  Rng rng(6);
  ParamSet p = InitMil(3, h, rng);
  p.at("proj.w") = Tensor::Identity(3);
  p.at("proj.b").Fill(0.0);
  for (int c = 0; c < 2; ++c) {
    const std::string a = "attn" + std::to_string(c) + ".";
    p.at(a + "V") = Tensor::Matrix({{1.0}, {0.0}, {0.0}});
    p.at(a + "Vb") = Tensor::Vector({-1.0});
    p.at(a + "U").Fill(0.0);
    p.at(a + "Ub") = Tensor::Vector({30.0});
    p.at(a + "w") = Tensor::Matrix({{100.0}});
  }
  const Tensor x = Tensor::Matrix({{2.0, 0.1, 0.5}, {2.0, 0.7, 0.2}, {2.0, 0.3, 0.9}});
  const Tensor extra = Tensor::Matrix(
      {{2.0, 0.1, 0.5}, {2.0, 0.7, 0.2}, {2.0, 0.3, 0.9}, {0.0, 5.0, 5.0}});
  const MilOutput a = MilForward(p, x), b = MilForward(p, extra);
  for (int c = 0; c < 2; ++c) {
    const auto& s = b.raw_scores[c];
    ASSERT_LT(s[3], *std::min_element(s.begin(), s.begin() + 3) - 50.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.embeddings[c][j], b.embeddings[c][j], 1e-6);
  }
}

TEST(Gradients, CrossEntropyThroughAttention) {
  Rng rng(7);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ParamSet p = RandomModel(4, rng);
    const Tensor x = RandomTensor({5, 4}, rng);
    const int label = static_cast<int>(seed % 2);
    const ObjectiveFn fn = [&](const ParamSet& ps, ParamSet* g) {
      return MilLoss(ps, x, label, g);
    };
    EXPECT_LT(GradCheck(fn, p).max_relative_error, 1e-4);
  }
}

std::vector<FeatureBag> SeparableBags(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<FeatureBag> bags;
  for (std::size_t s = 0; s < n; ++s) {
    FeatureBag b;
    b.slide_id = "s" + std::to_string(s);
    b.label = static_cast<int>(s % 2);
    const std::size_t np = 8 + rng.Below(8);
    b.features = RandomTensor({np, d}, rng, 0.3);
    for (std::size_t i = 0; i < np; ++i) {
      b.coords.emplace_back(i, 0);
      // Marker direction planted in a quarter of positive patches.
      if (b.label == 1 && i % 4 == 0) b.features.at(i, 0) += 3.0;
    }
    bags.push_back(b);
  }
  return bags;
}

TEST(Training, SeparableBagsReachLowLoss) {
  Rng rng(8);
  const auto bags = SeparableBags(20, 8, rng);
  MilHyper h;
  h.hidden = 32;
  h.attention = 16;
  const auto r = TrainMil(bags, h, 1);
  ASSERT_EQ(r.epoch_losses.size(), 100u);
  EXPECT_LT(r.epoch_losses.back(), 0.1);
}

TEST(Training, ZeroEpochsAndDeterminism) {
  Rng rng(9);
  const auto bags = SeparableBags(6, 4, rng);
  MilHyper h = SmallHyper();
  h.epochs = 0;
  Rng init(DeriveSeed(3, "mil-init"));
  EXPECT_EQ(TrainMil(bags, h, 3).model, InitMil(4, h, init));
  h.epochs = 3;
  EXPECT_EQ(TrainMil(bags, h, 3).model, TrainMil(bags, h, 3).model);
}

TEST(Training, SingleClassIsRejected) {
  Rng rng(10);
  auto bags = SeparableBags(4, 4, rng);
  for (auto& b : bags) b.label = 0;
  EXPECT_THROW(TrainMil(bags, SmallHyper(), 1), DatasetError);
  EXPECT_THROW(TrainMaxPool(bags, SmallHyper(), 1), DatasetError);
}

TEST(MaxPool, ScoreIsExhaustiveMax) {
  Rng rng(11);
  ParamSet pc;
  pc.Add("pc.w", RandomTensor({5, 1}, rng));
  pc.Add("pc.b", Tensor::Vector({0.2}));
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = RandomTensor({1 + rng.Below(10), 5}, rng);
    double best = 0;
    for (std::size_t i = 0; i < x.dim(0); ++i) {
      double z = 0.2;
      for (std::size_t j = 0; j < 5; ++j) z += x.at(i, j) * pc.at("pc.w")[j];
      best = std::max(best, 1.0 / (1.0 + std::exp(-z)));
    }
    EXPECT_NEAR(MaxPoolScore(pc, x), best, 1e-15);
  }
  ParamSet flat;
  flat.Add("pc.w", Tensor({5, 1}));
  flat.Add("pc.b", Tensor::Vector({std::log(0.2 / 0.8)}));
  EXPECT_NEAR(MaxPoolScore(flat, RandomTensor({4, 5}, rng)), 0.2, 1e-15);
}

TEST(MaxPool, LearnsSeparableBags) {
  Rng rng(12);
  const auto bags = SeparableBags(20, 8, rng);
  const auto r = TrainMaxPool(bags, MilHyper{}, 2);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

}  // namespace
}  // namespace weakmil::mil
