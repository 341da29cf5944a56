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

#include "weakmil/moco.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weakmil/error.hpp"
#include "weakmil/log.hpp"
#include "weakmil/optim.hpp"
#include "weakmil/parallel.hpp"
#include "weakmil/random.hpp"

namespace weakmil::ssl {

namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void RequireUnit(std::span<const double> v, double tol, const char* what) {
  const double n = std::sqrt(Dot(v, v));
  if (!(std::abs(n - 1.0) <= tol)) {
    throw ContractError(std::string(what) + " is not unit-norm (norm " +
                        std::to_string(n) + ")");
  }
}

void AddInto(ParamSet& acc, const ParamSet& g) {
  for (auto& [name, t] : acc) {
    auto src = g.at(name).data();
    auto dst = t.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace

void MoCoHyper::Validate() const {
  if (!(temperature > 0.0)) throw ConfigError("ssl.temperature must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("ssl.learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw ConfigError("ssl.momentum must lie in [0, 1]");
  }
  if (batch_size == 0) throw ConfigError("ssl.batch_size must be positive");
  if (queue_size < batch_size || queue_size % batch_size != 0) {
    throw ConfigError("ssl.queue_size must be a multiple of ssl.batch_size");
  }
  if (feature_dim == 0) throw ConfigError("ssl.feature_dim must be positive");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) {
    throw ConfigError("ssl.sgd_momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("ssl.weight_decay must be >= 0");
  if (patches_per_slide == 0) {
    throw ConfigError("ssl.patches_per_slide must be positive");
  }
}

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), buffer_({capacity, dim}) {
  if (capacity == 0 || dim == 0) {
    throw ContractError("queue capacity and dimension must be positive");
  }
}

void NegativeQueue::Enqueue(const Tensor& keys) {
  if (keys.rank() != 2 || keys.dim(1) != dim_) {
    throw DimensionError("enqueue expects [B, " + std::to_string(dim_) +
                         "], got " + ShapeString(keys.shape()));
  }
  const std::size_t b = keys.dim(0);
  if (b == 0 || capacity_ % b != 0) {
    throw ContractError("enqueue batch " + std::to_string(b) +
                        " does not divide queue size " +
                        std::to_string(capacity_));
  }
  for (std::size_t i = 0; i < b; ++i)
    RequireUnit(keys.data().subspan(i * dim_, dim_), 1e-6, "queued key");
  for (std::size_t i = 0; i < b; ++i) {
    std::copy_n(keys.data().begin() + i * dim_, dim_,
                buffer_.data().begin() + head_ * dim_);
    head_ = (head_ + 1) % capacity_;
  }
  fill_ = std::min(capacity_, fill_ + b);
}

Tensor NegativeQueue::Ordered() const {
  Tensor out({fill_, dim_});
  const std::size_t oldest = (head_ + capacity_ - fill_) % capacity_;
  for (std::size_t i = 0; i < fill_; ++i) {
    const std::size_t slot = (oldest + i) % capacity_;
    std::copy_n(buffer_.data().begin() + slot * dim_, dim_,
                out.data().begin() + i * dim_);
  }
  return out;
}

Tensor NegativeQueue::LiveTransposed() const {
  // Before the first wrap the live keys occupy slots [0, fill); afterwards
  // all slots are live. Either way the live slots are a prefix.
  Tensor out({dim_, fill_});
  for (std::size_t s = 0; s < fill_; ++s)
    for (std::size_t d = 0; d < dim_; ++d)
      out.at(d, s) = buffer_.at(s, d);
  return out;
}

double InfoNce(std::span<const double> q, std::span<const double> k_pos,
               const NegativeQueue& queue, double temperature) {
  if (q.size() != queue.dim() || k_pos.size() != queue.dim()) {
    throw DimensionError("InfoNCE vectors must match the queue dimension");
  }
  if (!(temperature > 0.0)) throw ContractError("temperature must be > 0");
  RequireUnit(q, 1e-4, "query");
  RequireUnit(k_pos, 1e-4, "positive key");
  std::vector<double> logits;
  logits.reserve(queue.fill() + 1);
  logits.push_back(Dot(q, k_pos) / temperature);
  const auto buf = queue.buffer().data();
  for (std::size_t s = 0; s < queue.fill(); ++s)
    logits.push_back(Dot(q, buf.subspan(s * queue.dim(), queue.dim())) /
                     temperature);
  return CrossEntropy(logits, 0);
}

ag::Var InfoNceLoss(ag::Var q, const Tensor& k_pos, const Tensor& negatives_t,
                    double temperature, double scale) {
  ag::Tape& tape = *q.tape();
  const std::size_t b = q.shape()[0];
  ag::Var logits = ag::RowDot(q, tape.Constant(k_pos));
  if (negatives_t.dim(1) > 0) {
    logits = ag::ConcatCols(logits, ag::Matmul(q, tape.Constant(negatives_t)));
  }
  logits = ag::Scale(logits, 1.0 / temperature);
  const std::vector<std::size_t> labels(b, 0);
  return ag::Scale(ag::CrossEntropyRows(logits, labels), scale);
}

ParamSet MomentumUpdate(const ParamSet& key, const ParamSet& query, double m) {
  if (!key.CongruentWith(query)) {
    throw DimensionError("momentum update needs congruent parameter sets");
  }
  ParamSet out = key;
  for (auto& [name, t] : out) {
    auto q = query.at(name).data();
    auto k = t.data();
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = m * k[i] + (1.0 - m) * q[i];
  }
  return out;
}

EncoderState InitEncoderState(const EncoderConfig& cfg, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "encoder-init"));
  EncoderState s;
  s.query = InitEncoder(cfg, rng);
  s.key = s.query;
  return s;
}

std::vector<PatchRef> SampleSslDataset(const std::vector<prep::PatchGrid>& grids,
                                       const std::vector<int>& labels,
                                       std::size_t patches_per_slide,
                                       std::uint64_t seed) {
  if (grids.size() != labels.size()) {
    throw DimensionError("one label per patch grid is required");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < grids.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DatasetError("slide labels must be 0 or 1");
    }
    if (grids[i].KeptCount() > 0) by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].empty()) {
      throw DatasetError("no slide with kept patches in class " +
                         std::to_string(c));
    }
  }
  Rng rng(DeriveSeed(seed, "ssl-sample"));
  const std::size_t per_class = std::min(by_class[0].size(), by_class[1].size());
  std::vector<bool> chosen(grids.size(), false);
  for (auto& members : by_class) {
    rng.Shuffle(members);
    for (std::size_t i = 0; i < per_class; ++i) chosen[members[i]] = true;
  }

  std::vector<PatchRef> out;
  for (std::size_t s = 0; s < grids.size(); ++s) {
    if (!chosen[s]) continue;
    const auto kept = grids[s].Kept();
    std::vector<std::size_t> idx(kept.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng slide_rng(DeriveSeed(DeriveSeed(seed, "ssl-sample-slide"), s));
    slide_rng.Shuffle(idx);
    idx.resize(std::min(patches_per_slide, idx.size()));
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.push_back({s, kept[i]->row, kept[i]->col});
  }
  return out;
}

SslResult TrainSsl(const std::vector<RgbImage>& patches, const MoCoHyper& hyper,
                   const EncoderConfig& encoder, const AugmentationConfig& aug,
                   std::uint64_t seed, std::size_t threads) {
  hyper.Validate();
  aug.Validate();
  if (encoder.feature_dim != hyper.feature_dim) {
    throw ConfigError("encoder feature_dim must equal ssl.feature_dim");
  }
  if (patches.size() < hyper.batch_size) {
    throw DatasetError("SSL dataset has " + std::to_string(patches.size()) +
                       " patches, fewer than one batch of " +
                       std::to_string(hyper.batch_size));
  }
  for (const auto& p : patches) {
    if (p.width() != encoder.input_px || p.height() != encoder.input_px) {
      throw DimensionError("SSL patches must be encoder.input_px square");
    }
  }

  SslResult result;
  result.state = InitEncoderState(encoder, seed);
  EncoderState& st = result.state;
  const std::size_t b = hyper.batch_size, d = hyper.feature_dim;

  // Start with a full queue of keys from the initial key encoder on real
  // augmented patches, so every batch sees K realistic negatives and epoch
  // losses are comparable from the first epoch on.
  NegativeQueue queue(hyper.queue_size, d);
  {
    Rng pick(DeriveSeed(seed, "queue-init"));
    const std::uint64_t view_seed = DeriveSeed(seed, "queue-init-views");
    for (std::size_t filled = 0; filled < hyper.queue_size; filled += b) {
      std::vector<std::size_t> idx(b);
      for (auto& i : idx) i = static_cast<std::size_t>(pick.Below(patches.size()));
      std::vector<RgbImage> views(b);
      ParallelFor(b, threads, [&](std::size_t i) {
        Rng r(DeriveSeed(view_seed, static_cast<std::uint64_t>(filled + i)));
        views[i] = Augment(patches[idx[i]], aug, r);
      });
      queue.Enqueue(Encode(st.key, views));
    }
  }

  const SgdConfig sgd{hyper.learning_rate, hyper.weight_decay, hyper.sgd_momentum};
  ParamSet velocity = st.query.ZerosLike();
  const std::size_t batches = patches.size() / b;
  const std::size_t chunks = (b + kSslChunk - 1) / kSslChunk;

  std::vector<std::size_t> order(patches.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng(DeriveSeed(DeriveSeed(seed, "ssl-order"), epoch));
    order_rng.Shuffle(order);
    const std::uint64_t view_seed = DeriveSeed(DeriveSeed(seed, "ssl-views"), epoch);

    double loss_sum = 0.0;
    for (std::size_t batch = 0; batch < batches; ++batch) {
      std::vector<RgbImage> vq(b), vk(b);
      ParallelFor(b, threads, [&](std::size_t i) {
        const std::size_t pos = batch * b + i;
        Rng r(DeriveSeed(view_seed, static_cast<std::uint64_t>(pos)));
        auto [q, k] = AugmentPair(patches[order[pos]], aug, r);
        vq[i] = std::move(q);
        vk[i] = std::move(k);
      });

      const Tensor negatives_t = queue.LiveTransposed();
      std::vector<Tensor> keys(chunks);
      std::vector<ParamSet> grads(chunks);
      std::vector<double> losses(chunks);
      ParallelFor(chunks, threads, [&](std::size_t c) {
        const std::size_t lo = c * kSslChunk, hi = std::min(b, lo + kSslChunk);
        const std::span<const RgbImage> qs(vq.data() + lo, hi - lo);
        const std::span<const RgbImage> ks(vk.data() + lo, hi - lo);
        keys[c] = Encode(st.key, ks);
        ag::Tape tape;
        BoundParams bound(tape, st.query);
        ag::Var q = EncodeOnTape(bound, tape.Constant(ImagesToTensor(qs)));
        const double scale = static_cast<double>(hi - lo) / static_cast<double>(b);
        ag::Var loss = InfoNceLoss(q, keys[c], negatives_t, hyper.temperature, scale);
        tape.Backward(loss);
        losses[c] = loss.value().item();
        grads[c] = bound.Grads();
      });

      double batch_loss = 0.0;
      for (double l : losses) batch_loss += l;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite InfoNCE loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch + 1));
      }
      for (std::size_t c = 1; c < chunks; ++c) AddInto(grads[0], grads[c]);

      SgdStepInPlace(st.query, grads[0], sgd, &velocity);
      st.key = MomentumUpdate(st.key, st.query, hyper.momentum);
      Tensor all_keys({b, d});
      for (std::size_t c = 0; c < chunks; ++c)
        std::copy(keys[c].data().begin(), keys[c].data().end(),
                  all_keys.data().begin() + c * kSslChunk * d);
      queue.Enqueue(all_keys);
      loss_sum += batch_loss;
    }
    const double mean = loss_sum / static_cast<double>(batches);
    result.epoch_losses.push_back(mean);
    LogInfo("ssl epoch " + std::to_string(epoch + 1) + "/" +
            std::to_string(hyper.epochs) + " mean_loss=" + std::to_string(mean));
  }
  return result;
}

}  // namespace weakmil::ssl
