// Copyright 2026 The mart-cpp Authors
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

#ifndef MART__CONFIG_HPP_
#define MART__CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mart/errors.hpp"

namespace mart
{

enum class SteVariant
{
  clipped_passthrough,
  triangle,
  long_tailed,
};

/// Denominator of the attention logits: sqrt(head width) or sqrt(d_n).
enum class AttentionScale
{
  head,
  model,
};

enum class LossReduction
{
  per_point,
  per_scene,
};

enum class MetricMode
{
  marginal,
  joint,
};

inline SteVariant parse_ste_variant(const std::string & s)
{
  if (s == "triangle") return SteVariant::triangle;
  if (s == "clipped_passthrough") return SteVariant::clipped_passthrough;
  if (s == "long_tailed") return SteVariant::long_tailed;
  throw ConfigError("unknown STE variant '" + s + "'");
}

inline std::string to_string(SteVariant v)
{
  switch (v) {
    case SteVariant::clipped_passthrough:
      return "clipped_passthrough";
    case SteVariant::triangle:
      return "triangle";
    case SteVariant::long_tailed:
      return "long_tailed";
  }
  return "triangle";
}

inline AttentionScale parse_attention_scale(const std::string & s)
{
  if (s == "head") return AttentionScale::head;
  if (s == "model") return AttentionScale::model;
  throw ConfigError("unknown attention_scale '" + s + "'");
}

inline std::string to_string(AttentionScale v) { return v == AttentionScale::head ? "head" : "model"; }

inline LossReduction parse_loss_reduction(const std::string & s)
{
  if (s == "per_scene") return LossReduction::per_scene;
  if (s == "per_point") return LossReduction::per_point;
  throw ConfigError("unknown loss_reduction '" + s + "'");
}

inline std::string to_string(LossReduction v)
{
  return v == LossReduction::per_scene ? "per_scene" : "per_point";
}

inline MetricMode parse_metric_mode(const std::string & s)
{
  if (s == "joint") return MetricMode::joint;
  if (s == "marginal") return MetricMode::marginal;
  throw ConfigError("unknown metric mode '" + s + "'");
}

inline std::string to_string(MetricMode v) { return v == MetricMode::joint ? "joint" : "marginal"; }

/// Architecture hyperparameters. Defaults are the ETH-UCY setting.
struct ModelConfig
{
  int d_in{2};
  int t_p{8};
  int t_f{12};
  int d_n{64};
  int d_e{64};
  int d_h{128};
  int d_dec{128};
  int layers{4};
  int heads{8};
  int k{20};
  SteVariant ste_variant{SteVariant::triangle};
  AttentionScale attention_scale{AttentionScale::head};
  double threshold_init{0.5};

  void validate() const
  {
    auto positive = [](int v, const char * name) {
      if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(d_in, "d_in");
    positive(t_f, "t_f");
    positive(d_n, "d_n");
    positive(d_e, "d_e");
    positive(d_h, "d_h");
    positive(d_dec, "d_dec");
    positive(heads, "heads");
    positive(k, "k");
    if (layers < 0) throw ConfigError("layers must be non-negative");
    if (t_p < 2) throw ConfigError("t_p must be at least 2");
    if (d_in != 2 && d_in != 4) throw ConfigError("d_in must be 2 (relative) or 4 (absolute+relative)");
    if (d_n % 2 != 0) throw ConfigError("d_n must be even for the positional encoding");
    if (d_n % heads != 0) throw ConfigError("d_n must be divisible by heads");
    if (d_dec < 2) throw ConfigError("d_dec must be at least 2");
    if (!(threshold_init > -1.0 && threshold_init < 1.0)) {
      throw ConfigError("threshold_init must lie in (-1, 1)");
    }
  }
};

/// Everything a training run needs; serialized as flat key=value text.
struct TrainConfig
{
  ModelConfig model;
  double lr{1e-3};
  int batch_size{64};
  int epochs{300};
  double lr_decay_factor{0.5};
  int lr_decay_every{100};
  std::uint64_t seed{0};
  int threads{1};
  long max_steps{0};  // 0: no cap
  LossReduction loss_reduction{LossReduction::per_scene};
  MetricMode metric_mode{MetricMode::joint};

  void validate() const
  {
    model.validate();
    if (lr < 0) throw ConfigError("lr must be non-negative");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (lr_decay_every <= 0) throw ConfigError("lr_decay_every must be positive");
    if (threads <= 0) throw ConfigError("threads must be positive");
    if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  }

  static const std::vector<std::string> & keys()
  {
    static const std::vector<std::string> k = {
      "d_in", "t_p", "t_f", "d_n", "d_e", "d_h", "d_dec", "layers", "heads", "k",
      "ste_variant", "attention_scale", "threshold_init", "lr", "batch_size", "epochs",
      "lr_decay_factor", "lr_decay_every", "seed", "threads", "max_steps", "loss_reduction",
      "metric_mode"};
    return k;
  }

  void set(const std::string & key, const std::string & value)
  {
    try {
      if (key == "d_in") model.d_in = std::stoi(value);
      else if (key == "t_p") model.t_p = std::stoi(value);
      else if (key == "t_f") model.t_f = std::stoi(value);
      else if (key == "d_n") model.d_n = std::stoi(value);
      else if (key == "d_e") model.d_e = std::stoi(value);
      else if (key == "d_h") model.d_h = std::stoi(value);
      else if (key == "d_dec") model.d_dec = std::stoi(value);
      else if (key == "layers") model.layers = std::stoi(value);
      else if (key == "heads") model.heads = std::stoi(value);
      else if (key == "k") model.k = std::stoi(value);
      else if (key == "ste_variant") model.ste_variant = parse_ste_variant(value);
      else if (key == "attention_scale") model.attention_scale = parse_attention_scale(value);
      else if (key == "threshold_init") model.threshold_init = std::stod(value);
      else if (key == "lr") lr = std::stod(value);
      else if (key == "batch_size") batch_size = std::stoi(value);
      else if (key == "epochs") epochs = std::stoi(value);
      else if (key == "lr_decay_factor") lr_decay_factor = std::stod(value);
      else if (key == "lr_decay_every") lr_decay_every = std::stoi(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "threads") threads = std::stoi(value);
      else if (key == "max_steps") max_steps = std::stol(value);
      else if (key == "loss_reduction") loss_reduction = parse_loss_reduction(value);
      else if (key == "metric_mode") metric_mode = parse_metric_mode(value);
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument &) {
      throw ConfigError("bad value '" + value + "' for key " + key);
    } catch (const std::out_of_range &) {
      throw ConfigError("value out of range for key " + key);
    }
  }

  std::map<std::string, std::string> to_map() const
  {
    auto num = [](double v) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      return os.str();
    };
    return {
      {"d_in", std::to_string(model.d_in)},
      {"t_p", std::to_string(model.t_p)},
      {"t_f", std::to_string(model.t_f)},
      {"d_n", std::to_string(model.d_n)},
      {"d_e", std::to_string(model.d_e)},
      {"d_h", std::to_string(model.d_h)},
      {"d_dec", std::to_string(model.d_dec)},
      {"layers", std::to_string(model.layers)},
      {"heads", std::to_string(model.heads)},
      {"k", std::to_string(model.k)},
      {"ste_variant", to_string(model.ste_variant)},
      {"attention_scale", to_string(model.attention_scale)},
      {"threshold_init", num(model.threshold_init)},
      {"lr", num(lr)},
      {"batch_size", std::to_string(batch_size)},
      {"epochs", std::to_string(epochs)},
      {"lr_decay_factor", num(lr_decay_factor)},
      {"lr_decay_every", std::to_string(lr_decay_every)},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
      {"max_steps", std::to_string(max_steps)},
      {"loss_reduction", to_string(loss_reduction)},
      {"metric_mode", to_string(metric_mode)},
    };
  }

  static TrainConfig from_map(const std::map<std::string, std::string> & kv)
  {
    TrainConfig c;
    for (const auto & [k, v] : kv) {
      c.set(k, v);
    }
    return c;
  }
};

/// Parses flat `key = value` text; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream & in)
{
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> load_key_values(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  return parse_key_values(in);
}

}  // namespace mart

#endif  // MART__CONFIG_HPP_
