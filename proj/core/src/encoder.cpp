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

#include "weakmil/encoder.hpp"

#include "weakmil/error.hpp"
#include "weakmil/preprocess.hpp"

namespace weakmil::ssl {

namespace {

constexpr std::size_t kKernel = 3;
// Maps [0, 255] to [-2, 2]; tissue pixels then have roughly unit spread.
constexpr double kInputScale = 4.0;

std::string ConvName(int i, const char* suffix) {
  return "conv" + std::to_string(i + 1) + "." + suffix;
}

template <typename Get>
ag::Var Forward(Get&& param, ag::Var h) {
  for (int i = 0; i < 3; ++i) {
    h = ag::Conv2dSame(h, param(ConvName(i, "w")), param(ConvName(i, "b")));
    h = ag::AvgPool2(ag::Relu(h));
  }
  h = ag::GlobalAvgPool(h);
  h = ag::Relu(ag::AddRowBias(ag::Matmul(h, param("head1.w")), param("head1.b")));
  h = ag::AddRowBias(ag::Matmul(h, param("head2.w")), param("head2.b"));
  return ag::L2NormalizeRows(h);
}

}  // namespace

void EncoderConfig::Validate() const {
  if (input_px == 0 || input_px % 8 != 0) {
    throw ConfigError("encoder.input_px must be a positive multiple of 8");
  }
  for (std::size_t c : channels)
    if (c == 0) throw ConfigError("encoder channels must be positive");
  if (head_hidden == 0 || feature_dim == 0) {
    throw ConfigError("encoder head sizes must be positive");
  }
}

ParamSet InitEncoder(const EncoderConfig& cfg, Rng& rng) {
  cfg.Validate();
  ParamSet p;
  std::size_t in = 3;
  for (int i = 0; i < 3; ++i) {
    const std::size_t out = cfg.channels[i];
    p.Add(ConvName(i, "w"),
          HeUniform({out, in, kKernel, kKernel}, in * kKernel * kKernel, rng));
    p.Add(ConvName(i, "b"), Tensor({out}));
    in = out;
  }
  p.Add("head1.w", HeUniform({in, cfg.head_hidden}, in, rng));
  p.Add("head1.b", Tensor({cfg.head_hidden}));
  p.Add("head2.w", GlorotUniform({cfg.head_hidden, cfg.feature_dim},
                                 cfg.head_hidden, cfg.feature_dim, rng));
  p.Add("head2.b", Tensor({cfg.feature_dim}));
  return p;
}

EncoderConfig InferEncoderConfig(const ParamSet& params, std::size_t input_px) {
  EncoderConfig cfg;
  cfg.input_px = input_px;
  for (int i = 0; i < 3; ++i) cfg.channels[i] = params.at(ConvName(i, "w")).dim(0);
  cfg.head_hidden = params.at("head1.w").dim(1);
  cfg.feature_dim = params.at("head2.w").dim(1);
  cfg.Validate();
  return cfg;
}

Tensor ImagesToTensor(std::span<const RgbImage> images) {
  if (images.empty()) throw DimensionError("empty image batch");
  const std::size_t w = images[0].width(), h = images[0].height();
  Tensor t({images.size(), 3, h, w});
  double* out = t.data().data();
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].width() != w || images[n].height() != h) {
      throw DimensionError("image batch has mixed sizes");
    }
    const std::uint8_t* px = images[n].bytes().data();
    for (int c = 0; c < 3; ++c) {
      double* plane = out + (n * 3 + c) * h * w;
      for (std::size_t i = 0; i < h * w; ++i)
        plane[i] = (static_cast<double>(px[3 * i + c]) / 255.0 - 0.5) * kInputScale;
    }
  }
  return t;
}

RgbImage PrepareEncoderInput(const RgbImage& patch, const EncoderConfig& cfg) {
  return prep::DownsampleArea(patch, cfg.input_px);
}

ag::Var EncodeOnTape(const BoundParams& params, ag::Var batch) {
  return Forward([&](const std::string& name) { return params[name]; }, batch);
}

Tensor Encode(const ParamSet& params, const Tensor& batch) {
  ag::Tape tape;
  // Parameters go on as constants, so no backward closures are recorded.
  return Forward([&](const std::string& name) {
           return tape.Constant(params.at(name));
         },
                 tape.Constant(batch))
      .value();
}

Tensor Encode(const ParamSet& params, std::span<const RgbImage> images) {
  return Encode(params, ImagesToTensor(images));
}

}  // namespace weakmil::ssl
