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

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "weakmil/param_set.hpp"

namespace weakmil {

/// Scalar objective. When `grads` is non-null the function must also fill it
/// with the analytic gradient (same names and shapes as `params`).
using ObjectiveFn = std::function<double(const ParamSet& params, ParamSet* grads)>;

struct GradCheckResult {
  /// Worst per-parameter relative error ||analytic - numeric|| /
  /// max(||analytic||, ||numeric||), zero when both norms vanish.
  double max_relative_error = 0.0;
  std::string worst_parameter;
  /// Entries compared, and entries skipped because a probe left the smooth
  /// piece of the base point.
  std::size_t probed = 0;
  std::size_t skipped = 0;
};

/// Identifies the smooth piece of a piecewise-smooth objective that contains
/// `params`, e.g. a hash of every ReLU sign.
using RegionFn = std::function<std::uint64_t(const ParamSet& params)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Probe at most this many entries per tensor, drawn without replacement
  /// from `seed`. 0 probes every entry.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
  /// When set, an entry whose +eps or -eps probe lies in a different region
  /// than the base point is skipped: the central difference straddles a kink
  /// there and says nothing about the derivative.
  RegionFn region;
};

/// Compares the analytic gradient against central differences
/// (f(p + eps) - f(p - eps)) / 2 eps, one scalar entry at a time. The
/// relative error of a tensor is taken over the probed entries only.
GradCheckResult GradCheck(const ObjectiveFn& fn, const ParamSet& params,
                          const GradCheckOptions& options);

inline GradCheckResult GradCheck(const ObjectiveFn& fn, const ParamSet& params,
                                 double epsilon = 1e-5) {
  GradCheckOptions options;
  options.epsilon = epsilon;
  return GradCheck(fn, params, options);
}

}  // namespace weakmil
