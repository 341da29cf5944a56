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

#include <cmath>
#include <functional>
#include <vector>

#include "test_util.hpp"
#include "weakmil/autodiff.hpp"
#include "weakmil/error.hpp"
#include "weakmil/gradcheck.hpp"
#include "weakmil/param_set.hpp"

namespace weakmil {
namespace {

using testing::RandomTensor;

// Runs `body` on a tape with params bound, reduces its output with a fixed
// random projection so every output entry reaches the loss, and checks the
// gradient numerically.
double CheckOp(const ParamSet& params,
               const std::function<ag::Var(const BoundParams&)>& body,
               std::uint64_t seed) {
  const ObjectiveFn fn = [&](const ParamSet& p, ParamSet* grads) {
    ag::Tape tape;
    BoundParams bound(tape, p);
    ag::Var out = body(bound);
    Rng rng(seed);
    const Tensor w = RandomTensor(out.shape(), rng);
    ag::Var loss = ag::Sum(ag::Mul(out, tape.Constant(w)));
    if (grads) {
      tape.Backward(loss);
      *grads = bound.Grads();
    }
    return loss.value().item();
  };
  return GradCheck(fn, params).max_relative_error;
}

class OpGradient : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  Rng rng{GetParam()};
};

TEST_P(OpGradient, MatmulTransposeReshape) {
  ParamSet p;
  p.Add("a", RandomTensor({3, 4}, rng));
  p.Add("b", RandomTensor({4, 2}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    return ag::Reshape(ag::Transpose(ag::Matmul(b["a"], b["b"])), {6, 1});
  }, GetParam()), 1e-7);
}

TEST_P(OpGradient, ElementwiseAndBias) {
  ParamSet p;
  p.Add("x", RandomTensor({3, 5}, rng));
  p.Add("y", RandomTensor({3, 5}, rng));
  p.Add("b", RandomTensor({5}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    ag::Var s = ag::Add(ag::Mul(b["x"], b["y"]), ag::Scale(ag::Sub(b["x"], b["y"]), 0.3));
    return ag::AddRowBias(s, b["b"]);
  }, GetParam()), 1e-7);
}

TEST_P(OpGradient, Activations) {
  ParamSet p;
  p.Add("x", RandomTensor({4, 6}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    return ag::Add(ag::Tanh(b["x"]), ag::Mul(ag::Sigmoid(b["x"]), ag::Relu(b["x"])));
  }, GetParam()), 1e-6);
}

TEST_P(OpGradient, Reductions) {
  ParamSet p;
  p.Add("x", RandomTensor({4, 3}, rng));
  p.Add("y", RandomTensor({4, 3}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    ag::Var s = ag::Add(ag::Sum(b["x"]), ag::Mean(ag::Mul(b["x"], b["y"])));
    return ag::Add(ag::Sum(ag::RowDot(b["x"], b["y"])), s);
  }, GetParam()), 1e-7);
}

TEST_P(OpGradient, NormalizeConcatSoftmax) {
  ParamSet p;
  p.Add("x", RandomTensor({3, 4}, rng));
  p.Add("y", RandomTensor({3, 2}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    ag::Var c = ag::ConcatCols(ag::L2NormalizeRows(b["x"]), b["y"]);
    return ag::Add(ag::Softmax(c, 0), ag::Softmax(c, 1));
  }, GetParam()), 1e-6);
}

TEST_P(OpGradient, CrossEntropyRows) {
  ParamSet p;
  p.Add("x", RandomTensor({5, 4}, rng, 2.0));
  const std::vector<std::size_t> labels = {0, 3, 1, 1, 2};
  const ObjectiveFn fn = [&](const ParamSet& ps, ParamSet* grads) {
    ag::Tape tape;
    BoundParams bound(tape, ps);
    ag::Var loss = ag::CrossEntropyRows(bound["x"], labels);
    if (grads) {
      tape.Backward(loss);
      *grads = bound.Grads();
    }
    return loss.value().item();
  };
  EXPECT_LT(GradCheck(fn, p).max_relative_error, 1e-7);
}

TEST_P(OpGradient, ConvolutionAndPooling) {
  ParamSet p;
  p.Add("x", RandomTensor({2, 3, 6, 6}, rng));
  p.Add("w", RandomTensor({4, 3, 3, 3}, rng, 0.5));
  p.Add("b", RandomTensor({4}, rng));
  EXPECT_LT(CheckOp(p, [](const BoundParams& b) {
    ag::Var y = ag::AvgPool2(ag::Conv2dSame(b["x"], b["w"], b["b"]));
    return ag::GlobalAvgPool(y);
  }, GetParam()), 1e-7);
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradient, ::testing::Values(1u, 2u, 3u, 4u, 5u));

// Direct loop oracle for zero-padded 3x3 cross-correlation.
TEST(Conv2dSame, MatchesLoopOracle) {
  Rng rng(9);
  const Tensor x = RandomTensor({2, 3, 5, 4}, rng);
  const Tensor w = RandomTensor({2, 3, 3, 3}, rng);
  const Tensor b = RandomTensor({2}, rng);
  ag::Tape tape;
  const Tensor y = ag::Conv2dSame(tape.Constant(x), tape.Constant(w), tape.Constant(b)).value();
  ASSERT_EQ(y.shape(), (Shape{2, 2, 5, 4}));
  const auto X = [&](int n, int c, int i, int j) -> double {
    if (i < 0 || j < 0 || i >= 5 || j >= 4) return 0.0;
    return x[((n * 3 + c) * 5 + i) * 4 + j];
  };
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 2; ++o)
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) {
          double s = b[o];
          for (int c = 0; c < 3; ++c)
            for (int di = -1; di <= 1; ++di)
              for (int dj = -1; dj <= 1; ++dj)
                s += w[((o * 3 + c) * 3 + di + 1) * 3 + dj + 1] * X(n, c, i + di, j + dj);
          EXPECT_NEAR(y[((n * 2 + o) * 5 + i) * 4 + j], s, 1e-12);
        }
}

TEST(Softmax, ColumnsSumToOne) {
  Rng rng(3);
  const Tensor s = Softmax(RandomTensor({7, 3}, rng, 10.0), 0);
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < 7; ++r) sum += s.at(r, c);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CrossEntropy, MatchesClosedForm) {
  const std::vector<double> logits = {1.0, 2.0, 0.5};
  const double expected =
      -std::log(std::exp(2.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(0.5)));
  EXPECT_NEAR(CrossEntropy(logits, 1), expected, 1e-14);
  // Large logits stay finite.
  EXPECT_NEAR(CrossEntropy(std::vector<double>{1000.0, 0.0}, 1), 1000.0, 1e-9);
}

TEST(Tape, ConstantsReceiveNoGradient) {
  ag::Tape tape;
  ag::Var c = tape.Constant(Tensor::Scalar(2.0));
  ag::Var p = tape.Parameter(Tensor::Scalar(3.0));
  tape.Backward(ag::Mul(c, p));
  EXPECT_FALSE(tape.requires_grad(c.id()));
  EXPECT_DOUBLE_EQ(p.grad().item(), 2.0);
}

TEST(Tape, ShapeMismatchIsRejected) {
  ag::Tape tape;
  ag::Var a = tape.Constant(Tensor({2, 3}));
  ag::Var b = tape.Constant(Tensor({2, 2}));
  EXPECT_THROW(ag::Matmul(a, b), DimensionError);
  EXPECT_THROW(ag::Add(a, b), DimensionError);
}

TEST(GradCheck, DetectsWrongGradient) {
  ParamSet p;
  p.Add("x", Tensor::Vector({1.0, 2.0}));
  const ObjectiveFn fn = [](const ParamSet& ps, ParamSet* grads) {
    const auto& x = ps.at("x");
    if (grads) grads->at("x") = Tensor::Vector({2.0 * x[0], 0.0});
    return x[0] * x[0] + x[1] * x[1];
  };
  EXPECT_GT(GradCheck(fn, p).max_relative_error, 0.1);
}

TEST(GradCheck, SampledEntriesAreASubset) {
  ParamSet p;
  p.Add("x", Tensor({50}, 1.0));
  std::size_t calls = 0;
  const ObjectiveFn fn = [&](const ParamSet& ps, ParamSet* grads) {
    ++calls;
    double s = 0.0;
    for (double v : ps.at("x").data()) s += v * v;
    if (grads) {
      Tensor g = ps.at("x");
      for (double& v : g.data()) v *= 2.0;
      grads->at("x") = g;
    }
    return s;
  };
  GradCheckOptions opts;
  opts.max_entries_per_tensor = 7;
  opts.seed = 3;
  const auto r = GradCheck(fn, p, opts);
  EXPECT_EQ(calls, 1u + 2u * 7u);
  EXPECT_EQ(r.probed, 7u);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

// sum relu(x) with one entry 1e-6 from its kink: the central difference
// there averages slopes 0 and 1.
TEST(GradCheck, RegionSkipsProbesAcrossKinks) {
  ParamSet p;
  p.Add("x", Tensor::Vector({1e-6, 0.5, -0.7, 2.0}));
  const ObjectiveFn fn = [](const ParamSet& ps, ParamSet* grads) {
    ag::Tape tape;
    BoundParams bound(tape, ps);
    ag::Var y = ag::Sum(ag::Relu(bound["x"]));
    if (grads) {
      tape.Backward(y);
      *grads = bound.Grads();
    }
    return y.value().item();
  };
  EXPECT_GT(GradCheck(fn, p).max_relative_error, 0.1);

  GradCheckOptions opts;
  opts.region = [](const ParamSet& ps) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < ps.at("x").size(); ++i)
      if (ps.at("x")[i] > 0) bits |= std::uint64_t{1} << i;
    return bits;
  };
  const auto r = GradCheck(fn, p, opts);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.probed, 3u);
  EXPECT_LT(r.max_relative_error, 1e-9);
}

}  // namespace
}  // namespace weakmil
