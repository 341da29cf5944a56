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

#include "weakmil/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>
#include <type_traits>
#include <vector>

#include "toml.hpp"
#include "weakmil/csv.hpp"
#include "weakmil/error.hpp"

extern char** environ;

namespace weakmil {

namespace {

[[noreturn]] void Bad(const std::string& key, const std::string& why) {
  throw ConfigError(key + ": " + why);
}

template <typename T>
T CheckedUnsigned(const std::string& key, long long v) {
  if (v < 0 || static_cast<unsigned long long>(v) >
                   static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
    Bad(key, "integer " + std::to_string(v) + " out of range");
  }
  return static_cast<T>(v);
}

template <typename T>
T ParseUnsignedString(const std::string& key, const std::string& s) {
  unsigned long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    Bad(key, "expected a non-negative integer, got '" + s + "'");
  }
  if (v > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
    Bad(key, "integer '" + s + "' out of range");
  }
  return static_cast<T>(v);
}

double ParseDoubleString(const std::string& key, const std::string& s) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    Bad(key, "expected a number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> SplitList(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(),
                         [](unsigned char c) { return std::isspace(c) || c == '[' || c == ']'; }),
          s.end());
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
  return out;
}

double NodeDouble(const std::string& key, const toml::node& n) {
  if (n.is_floating_point()) return *n.value<double>();
  if (n.is_integer()) return static_cast<double>(*n.value<long long>());
  Bad(key, "expected a number");
}

// Typed conversions between TOML nodes, strings and canonical text.
template <typename T>
struct Codec;

template <typename T>
  requires std::is_unsigned_v<T> && (!std::is_same_v<T, bool>)
struct Codec<T> {
  static T FromToml(const std::string& key, const toml::node& n) {
    if (!n.is_integer()) Bad(key, "expected a non-negative integer");
    return CheckedUnsigned<T>(key, *n.value<long long>());
  }
  static T FromString(const std::string& key, const std::string& s) {
    return ParseUnsignedString<T>(key, s);
  }
  static std::string Text(T v) { return std::to_string(v); }
};

template <>
struct Codec<double> {
  static double FromToml(const std::string& key, const toml::node& n) {
    return NodeDouble(key, n);
  }
  static double FromString(const std::string& key, const std::string& s) {
    return ParseDoubleString(key, s);
  }
  static std::string Text(double v) { return FormatDouble(v); }
};

template <>
struct Codec<bool> {
  static bool FromToml(const std::string& key, const toml::node& n) {
    if (!n.is_boolean()) Bad(key, "expected true or false");
    return *n.value<bool>();
  }
  static bool FromString(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    Bad(key, "expected true or false, got '" + s + "'");
  }
  static std::string Text(bool v) { return v ? "true" : "false"; }
};

template <>
struct Codec<std::filesystem::path> {
  static std::filesystem::path FromToml(const std::string& key, const toml::node& n) {
    if (!n.is_string()) Bad(key, "expected a string");
    return *n.value<std::string>();
  }
  static std::filesystem::path FromString(const std::string&, const std::string& s) {
    return s;
  }
  static std::string Text(const std::filesystem::path& v) { return v.generic_string(); }
};

template <>
struct Codec<std::vector<double>> {
  static std::vector<double> FromToml(const std::string& key, const toml::node& n) {
    const toml::array* a = n.as_array();
    if (a == nullptr) Bad(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : *a) out.push_back(NodeDouble(key, item));
    return out;
  }
  static std::vector<double> FromString(const std::string& key, const std::string& s) {
    std::vector<double> out;
    for (const auto& item : SplitList(s)) out.push_back(ParseDoubleString(key, item));
    return out;
  }
  static std::string Text(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + FormatDouble(v[i]);
    return s + "]";
  }
};

template <>
struct Codec<std::array<std::size_t, 3>> {
  using T = std::array<std::size_t, 3>;
  static T FromToml(const std::string& key, const toml::node& n) {
    const toml::array* a = n.as_array();
    if (a == nullptr || a->size() != 3) Bad(key, "expected an array of 3 integers");
    T out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = Codec<std::size_t>::FromToml(key, *a->get(i));
    return out;
  }
  static T FromString(const std::string& key, const std::string& s) {
    const auto items = SplitList(s);
    if (items.size() != 3) Bad(key, "expected 3 comma-separated integers");
    T out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = ParseUnsignedString<std::size_t>(key, items[i]);
    return out;
  }
  static std::string Text(const T& v) {
    return "[" + std::to_string(v[0]) + ", " + std::to_string(v[1]) + ", " +
           std::to_string(v[2]) + "]";
  }
};

struct Field {
  std::string key;  // section.name
  std::function<void(PipelineConfig&, const toml::node&)> from_toml;
  std::function<void(PipelineConfig&, const std::string&)> from_string;
  std::function<std::string(const PipelineConfig&)> text;
  bool canonical = true;
};

template <typename Access>
Field MakeField(std::string key, Access access, bool canonical = true) {
  using T = std::remove_reference_t<decltype(access(std::declval<PipelineConfig&>()))>;
  Field f;
  f.key = key;
  f.from_toml = [key, access](PipelineConfig& c, const toml::node& n) {
    access(c) = Codec<T>::FromToml(key, n);
  };
  f.from_string = [key, access](PipelineConfig& c, const std::string& s) {
    access(c) = Codec<T>::FromString(key, s);
  };
  f.text = [access](const PipelineConfig& c) {
    return Codec<T>::Text(access(const_cast<PipelineConfig&>(c)));
  };
  f.canonical = canonical;
  return f;
}

#define WEAKMIL_FIELD(key, member) \
  MakeField(key, [](PipelineConfig& c) -> auto& { return c.member; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(WEAKMIL_FIELD("run.seed", seed));
    f.push_back(MakeField("run.threads", [](PipelineConfig& c) -> auto& { return c.threads; }, false));
    f.push_back(MakeField("run.out_dir", [](PipelineConfig& c) -> auto& { return c.out_dir; }, false));

    f.push_back(WEAKMIL_FIELD("synth.n_slides", synth.n_slides));
    f.push_back(WEAKMIL_FIELD("synth.positive_fraction", synth.positive_fraction));
    f.push_back(WEAKMIL_FIELD("synth.slide_px", synth.slide_px));
    f.push_back(WEAKMIL_FIELD("synth.patch_px", synth.patch_px));
    f.push_back(WEAKMIL_FIELD("synth.marker_fraction", synth.marker_fraction));
    f.push_back(WEAKMIL_FIELD("synth.background_intensity", synth.background_intensity));
    f.push_back(WEAKMIL_FIELD("synth.tissue_fraction_min", synth.tissue_fraction_min));
    f.push_back(WEAKMIL_FIELD("synth.tissue_fraction_max", synth.tissue_fraction_max));

    f.push_back(WEAKMIL_FIELD("preprocess.min_channel_median", qc.min_channel_median));
    f.push_back(WEAKMIL_FIELD("preprocess.white_mean_center", qc.white_mean_center));
    f.push_back(WEAKMIL_FIELD("preprocess.white_mean_halfwidth", qc.white_mean_halfwidth));
    f.push_back(WEAKMIL_FIELD("preprocess.min_tissue_fraction", qc.min_tissue_fraction));
    f.push_back(WEAKMIL_FIELD("preprocess.patch_microns", microns.patch_microns));
    f.push_back(WEAKMIL_FIELD("preprocess.microns_per_pixel", microns.microns_per_pixel));
    f.push_back(WEAKMIL_FIELD("preprocess.output_px", output_px));

    f.push_back(WEAKMIL_FIELD("encoder.input_px", encoder.input_px));
    f.push_back(WEAKMIL_FIELD("encoder.channels", encoder.channels));
    f.push_back(WEAKMIL_FIELD("encoder.head_hidden", encoder.head_hidden));

    f.push_back(WEAKMIL_FIELD("ssl.temperature", ssl.temperature));
    f.push_back(WEAKMIL_FIELD("ssl.learning_rate", ssl.learning_rate));
    f.push_back(WEAKMIL_FIELD("ssl.epochs", ssl.epochs));
    f.push_back(WEAKMIL_FIELD("ssl.momentum", ssl.momentum));
    f.push_back(WEAKMIL_FIELD("ssl.queue_size", ssl.queue_size));
    f.push_back(WEAKMIL_FIELD("ssl.batch_size", ssl.batch_size));
    f.push_back(WEAKMIL_FIELD("ssl.feature_dim", ssl.feature_dim));
    f.push_back(WEAKMIL_FIELD("ssl.sgd_momentum", ssl.sgd_momentum));
    f.push_back(WEAKMIL_FIELD("ssl.weight_decay", ssl.weight_decay));
    f.push_back(WEAKMIL_FIELD("ssl.patches_per_slide", ssl.patches_per_slide));

    f.push_back(WEAKMIL_FIELD("augment.rotate90", augment.rotate90));
    f.push_back(WEAKMIL_FIELD("augment.hflip_probability", augment.hflip_probability));
    f.push_back(WEAKMIL_FIELD("augment.vflip_probability", augment.vflip_probability));
    f.push_back(WEAKMIL_FIELD("augment.brightness", augment.brightness));
    f.push_back(WEAKMIL_FIELD("augment.contrast", augment.contrast));
    f.push_back(WEAKMIL_FIELD("augment.saturation", augment.saturation));
    f.push_back(WEAKMIL_FIELD("augment.blur_probability", augment.blur_probability));
    f.push_back(WEAKMIL_FIELD("augment.blur_sigma_min", augment.blur_sigma_min));
    f.push_back(WEAKMIL_FIELD("augment.blur_sigma_max", augment.blur_sigma_max));
    f.push_back(WEAKMIL_FIELD("augment.blur_reference_px", augment.blur_reference_px));

    f.push_back(WEAKMIL_FIELD("mil.learning_rate", mil.learning_rate));
    f.push_back(WEAKMIL_FIELD("mil.weight_decay", mil.weight_decay));
    f.push_back(WEAKMIL_FIELD("mil.epochs", mil.epochs));
    f.push_back(WEAKMIL_FIELD("mil.hidden", mil.hidden));
    f.push_back(WEAKMIL_FIELD("mil.attention", mil.attention));
    f.push_back(WEAKMIL_FIELD("mil.momentum", mil.momentum));
    f.push_back(WEAKMIL_FIELD("mil.lr_grid", mil.lr_grid));
    f.push_back(WEAKMIL_FIELD("mil.wd_grid", mil.wd_grid));
    f.push_back(WEAKMIL_FIELD("mil.grid_search", grid_search));

    f.push_back(WEAKMIL_FIELD("eval.folds", eval.folds));
    f.push_back(WEAKMIL_FIELD("eval.test_size", eval.test_size));
    f.push_back(WEAKMIL_FIELD("eval.threshold", eval.threshold));
    f.push_back(WEAKMIL_FIELD("eval.baseline", eval.baseline));

    f.push_back(WEAKMIL_FIELD("heatmap.alpha", heatmap.alpha));
    f.push_back(WEAKMIL_FIELD("heatmap.percentile_clip", heatmap.normalize.percentile_clip));
    f.push_back(WEAKMIL_FIELD("heatmap.low_percentile", heatmap.normalize.low_percentile));
    f.push_back(WEAKMIL_FIELD("heatmap.high_percentile", heatmap.normalize.high_percentile));
    f.push_back(WEAKMIL_FIELD("heatmap.clip_min_count", heatmap.normalize.clip_min_count));
    return f;
  }();
  return fields;
}

#undef WEAKMIL_FIELD

const Field& FindField(const std::string& key) {
  for (const auto& f : Fields())
    if (f.key == key) return f;
  throw ConfigError(key + ": unknown configuration key");
}

// Values that are configured once but consumed in two places.
void Sync(PipelineConfig& c) {
  c.encoder.feature_dim = c.ssl.feature_dim;
  c.synth.seed = c.seed;
}

std::string EnvName(const std::string& key) {
  std::string s = "WEAKMIL_";
  for (char ch : key) s.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(ch)));
  return s;
}

}  // namespace

void PipelineConfig::Validate() const {
  synth.Validate();
  qc.Validate();
  microns.Validate();
  encoder.Validate();
  ssl.Validate();
  augment.Validate();
  mil.Validate();
  if (threads == 0) throw ConfigError("run.threads must be at least 1");
  if (output_px == 0) throw ConfigError("preprocess.output_px must be positive");
  if (encoder.feature_dim != ssl.feature_dim) {
    throw ConfigError("ssl.feature_dim must match the encoder output width");
  }
  if (eval.folds < 2) throw ConfigError("eval.folds must be at least 2");
  if (!(eval.threshold >= 0.0 && eval.threshold <= 1.0)) {
    throw ConfigError("eval.threshold must lie in [0, 1]");
  }
  if (grid_search && (mil.lr_grid.empty() || mil.wd_grid.empty())) {
    throw ConfigError("mil.lr_grid and mil.wd_grid must be nonempty for grid search");
  }
  if (!(heatmap.alpha >= 0.0 && heatmap.alpha <= 1.0)) {
    throw ConfigError("heatmap.alpha must lie in [0, 1]");
  }
  const auto& n = heatmap.normalize;
  if (!(n.low_percentile >= 0.0 && n.low_percentile < n.high_percentile &&
        n.high_percentile <= 100.0)) {
    throw ConfigError("heatmap percentiles must satisfy 0 <= low < high <= 100");
  }
}

std::string PipelineConfig::Canonical() const {
  std::string out;
  for (const auto& f : Fields())
    if (f.canonical) out += f.key + " = " + f.text(*this) + "\n";
  return out;
}

PipelineConfig ParseConfigToml(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error at line " << e.source().begin.line << ": "
        << e.description();
    throw ConfigError(msg.str());
  }
  PipelineConfig cfg;
  for (const auto& [section, node] : root) {
    const toml::table* table = node.as_table();
    if (table == nullptr) {
      throw ConfigError(std::string(section.str()) + ": expected a [section] table");
    }
    for (const auto& [name, value] : *table) {
      const std::string key = std::string(section.str()) + "." + std::string(name.str());
      FindField(key).from_toml(cfg, value);
    }
  }
  Sync(cfg);
  return cfg;
}

PipelineConfig LoadConfigFile(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file '" + path.string() + "' does not exist");
  }
  return ParseConfigToml(ReadTextFile(path));
}

void ApplyEnvOverrides(PipelineConfig& cfg,
                       const std::map<std::string, std::string>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind("WEAKMIL_", 0) != 0) continue;
    const Field* match = nullptr;
    for (const auto& f : Fields())
      if (EnvName(f.key) == name) match = &f;
    if (match == nullptr) {
      throw ConfigError(name + ": unknown configuration variable");
    }
    match->from_string(cfg, value);
  }
  Sync(cfg);
}

std::map<std::string, std::string> ProcessEnvironment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(0, eq);
    if (name.rfind("WEAKMIL_", 0) == 0) env[name] = entry.substr(eq + 1);
  }
  return env;
}

void SetConfigValue(PipelineConfig& cfg, const std::string& key,
                    const std::string& value) {
  FindField(key).from_string(cfg, value);
  Sync(cfg);
}

}  // namespace weakmil
