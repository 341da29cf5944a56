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

// Momentum-contrast training: negative queue, InfoNCE, key-encoder EMA.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "weakmil/augment.hpp"
#include "weakmil/encoder.hpp"
#include "weakmil/param_set.hpp"
#include "weakmil/preprocess.hpp"

namespace weakmil::ssl {

struct MoCoHyper {
  double temperature = 0.07;
  double learning_rate = 0.06;
  std::size_t epochs = 20;
  /// Key-encoder EMA coefficient m.
  double momentum = 0.999;
  std::size_t queue_size = 1024;
  std::size_t batch_size = 32;
  std::size_t feature_dim = 64;
  /// Optimizer settings for the query encoder. Plain SGD by default: the
  /// encoder output is scale-free, and heavy-ball momentum at lr 0.06 makes
  /// the query outrun the slow key encoder.
  double sgd_momentum = 0.0;
  double weight_decay = 1e-4;
  std::size_t patches_per_slide = 50;

  void Validate() const;
};

/// Ring buffer of K unit-norm keys. Rows are stored at their ring slot;
/// Oldest() walks them in FIFO order.
class NegativeQueue {
 public:
  NegativeQueue(std::size_t capacity, std::size_t dim);

  /// Appends the rows of `keys` ([B, D]). B must divide the capacity and
  /// every row must have unit norm within 1e-6.
  void Enqueue(const Tensor& keys);

  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }
  std::size_t fill() const { return fill_; }
  std::size_t head() const { return head_; }
  /// [K, D] storage; only `fill` slots hold keys.
  const Tensor& buffer() const { return buffer_; }

  /// Live keys, oldest first, as a [fill, D] tensor.
  Tensor Ordered() const;
  /// Live keys in slot order, transposed to [D, fill] for q * K^T.
  Tensor LiveTransposed() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::size_t head_ = 0;
  std::size_t fill_ = 0;
  Tensor buffer_;
};

/// InfoNCE for one query:
///   -log exp(q.k+/t) / (exp(q.k+/t) + sum_i exp(q.k-_i/t))
/// q and k+ must be unit-norm within 1e-4 (ContractError otherwise).
double InfoNce(std::span<const double> q, std::span<const double> k_pos,
               const NegativeQueue& queue, double temperature);

/// Batch-mean InfoNCE on a tape. Only `q` carries gradient; `k_pos` [B, D]
/// and `negatives_t` [D, fill] are detached constants. `scale` multiplies
/// the mean so chunked batches can be summed.
ag::Var InfoNceLoss(ag::Var q, const Tensor& k_pos, const Tensor& negatives_t,
                    double temperature, double scale = 1.0);

/// theta_k' = m * theta_k + (1 - m) * theta_q, elementwise.
ParamSet MomentumUpdate(const ParamSet& key, const ParamSet& query, double m);

struct EncoderState {
  ParamSet query;
  ParamSet key;
};

/// Query encoder from InitEncoder and a key encoder copied from it.
EncoderState InitEncoderState(const EncoderConfig& cfg, std::uint64_t seed);

/// A kept patch of one slide.
struct PatchRef {
  std::size_t slide = 0;  // index into the grids passed to the sampler
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const PatchRef&) const = default;
};

/// Class-balanced, seeded patch sample. The same number of slides is drawn
/// from each class (the smaller class size), then min(patches_per_slide,
/// kept) patches per slide without replacement. Output is grouped by slide
/// in input order, patches in grid order.
std::vector<PatchRef> SampleSslDataset(const std::vector<prep::PatchGrid>& grids,
                                       const std::vector<int>& labels,
                                       std::size_t patches_per_slide,
                                       std::uint64_t seed);

struct SslResult {
  EncoderState state;
  std::vector<double> epoch_losses;
};

/// Runs MoCo training on patches already at the encoder input size. Every
/// batch: two views per patch, q from theta_q on a tape, k+ from theta_k,
/// InfoNCE against the queue, SGD on theta_q, EMA of theta_k, enqueue k+.
/// The last partial batch of an epoch is dropped. Gradients are summed over
/// fixed-size chunks in a fixed order, so results do not depend on
/// `threads`.
SslResult TrainSsl(const std::vector<RgbImage>& patches, const MoCoHyper& hyper,
                   const EncoderConfig& encoder, const AugmentationConfig& aug,
                   std::uint64_t seed, std::size_t threads = 1);

/// Rows per gradient chunk inside a batch.
inline constexpr std::size_t kSslChunk = 8;

}  // namespace weakmil::ssl
