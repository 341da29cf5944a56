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

// Progress messages go to stderr; data never does.

#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace weakmil {

inline std::atomic<bool>& LogEnabledFlag() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void SetLogEnabled(bool on) { LogEnabledFlag().store(on); }

inline void LogInfo(const std::string& message) {
  if (!LogEnabledFlag().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[weakmil] " << message << '\n';
}

}  // namespace weakmil
