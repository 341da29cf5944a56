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

#include "weakmil/gradcheck.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "weakmil/error.hpp"
#include "weakmil/random.hpp"

namespace weakmil {

namespace {

double Checked(double v, const char* where) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite objective during ") + where);
  }
  return v;
}

}  // namespace

GradCheckResult GradCheck(const ObjectiveFn& fn, const ParamSet& params,
                          const GradCheckOptions& options) {
  const double epsilon = options.epsilon;
  Rng rng(options.seed);
  ParamSet analytic = params.ZerosLike();
  Checked(fn(params, &analytic), "analytic evaluation");

  GradCheckResult result;
  const std::uint64_t base_region = options.region ? options.region(params) : 0;
  const auto same_region = [&](const ParamSet& p) {
    return !options.region || options.region(p) == base_region;
  };
  ParamSet probe = params;
  for (auto& [name, tensor] : probe) {
    const Tensor& a = analytic.at(name);
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    std::vector<std::size_t> entries(tensor.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    const std::size_t cap = options.max_entries_per_tensor;
    if (cap != 0 && cap < entries.size()) {
      rng.Shuffle(entries);
      entries.resize(cap);
    }
    for (std::size_t i : entries) {
      const double saved = tensor[i];
      tensor[i] = saved + epsilon;
      const double up = Checked(fn(probe, nullptr), "forward difference");
      const bool up_smooth = same_region(probe);
      tensor[i] = saved - epsilon;
      const double down = Checked(fn(probe, nullptr), "backward difference");
      const bool down_smooth = same_region(probe);
      tensor[i] = saved;
      if (!up_smooth || !down_smooth) {
        ++result.skipped;
        continue;
      }
      ++result.probed;
      const double numeric = (up - down) / (2.0 * epsilon);
      diff2 += (a[i] - numeric) * (a[i] - numeric);
      a2 += a[i] * a[i];
      n2 += numeric * numeric;
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    const double rel = denom > 1e-300 ? std::sqrt(diff2) / denom : 0.0;
    if (result.worst_parameter.empty() || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_parameter = name;
    }
  }
  return result;
}

}  // namespace weakmil
