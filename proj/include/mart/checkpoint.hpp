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

#ifndef MART__CHECKPOINT_HPP_
#define MART__CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mart/config.hpp"
#include "mart/errors.hpp"
#include "mart/model.hpp"
#include "mart/params.hpp"

namespace mart
{

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char * kCheckpointMagic = "MARTCKPT";

/// Adam moments and counters carried by a checkpoint for resuming.
struct OptimizerState
{
  long step{0};
  int epoch{0};
  Gradients<float> m;
  Gradients<float> v;
};

/**
 * @brief A saved training state.
 *
 * On disk: the magic line, one line of JSON manifest, then the parameters as
 * little-endian float32 in manifest order, then (optionally) the Adam first
 * and second moments in the same layout.
 */
struct Checkpoint
{
  TrainConfig config;
  ParameterStore<float> params;
  std::optional<OptimizerState> optimizer;
};

namespace detail
{

constexpr std::uint32_t swap_bytes(std::uint32_t w)
{
  return (w >> 24) | ((w >> 8) & 0xff00u) | ((w << 8) & 0xff0000u) | (w << 24);
}

inline void put_floats(std::ostream & out, const std::vector<float> & v)
{
  std::vector<std::uint32_t> words(v.size());
  std::memcpy(words.data(), v.data(), v.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::big) {
    for (auto & w : words) w = swap_bytes(w);
  }
  out.write(reinterpret_cast<const char *>(words.data()), static_cast<std::streamsize>(words.size() * 4));
}

inline std::vector<float> get_floats(std::istream & in, std::size_t count)
{
  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char *>(words.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<std::size_t>(in.gcount()) != count * 4) {
    throw FormatError("checkpoint payload is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto & w : words) w = swap_bytes(w);
  }
  std::vector<float> v(count);
  std::memcpy(v.data(), words.data(), count * sizeof(float));
  return v;
}

inline std::vector<float> flatten(const Gradients<float> & g)
{
  std::vector<float> out;
  for (const auto & a : g) out.insert(out.end(), a.data().begin(), a.data().end());
  return out;
}

inline Gradients<float> unflatten_like(const ParameterStore<float> & p, const std::vector<float> & flat)
{
  Gradients<float> g = zero_gradients(p);
  std::size_t off = 0;
  for (auto & a : g) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), a.size(), a.data().begin());
    off += a.size();
  }
  return g;
}

}  // namespace detail

inline void write_checkpoint(const Checkpoint & ck, std::ostream & out)
{
  using nlohmann::json;
  const std::size_t bytes = ck.params.total_size() * 4;
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = ck.config.to_map();
  json params = json::array();
  for (std::size_t i = 0; i < ck.params.count(); ++i) {
    params.push_back({{"name", ck.params.name(i)}, {"shape", ck.params.spec(i).shape}});
  }
  manifest["params"] = std::move(params);
  manifest["payload_bytes"] = bytes;
  if (ck.optimizer) {
    manifest["optimizer"] = {
      {"step", ck.optimizer->step}, {"epoch", ck.optimizer->epoch}, {"bytes", 2 * bytes}};
  }
  out << kCheckpointMagic << '\n' << manifest.dump() << '\n';
  detail::put_floats(out, ck.params.flatten());
  if (ck.optimizer) {
    detail::put_floats(out, detail::flatten(ck.optimizer->m));
    detail::put_floats(out, detail::flatten(ck.optimizer->v));
  }
}

inline Checkpoint read_checkpoint(std::istream & in)
{
  std::string magic;
  std::string line;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  if (!std::getline(in, line)) throw FormatError("checkpoint manifest missing");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception & e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  const bool version_ok = manifest.contains("format_version") && manifest["format_version"].is_number_integer() &&
                          manifest["format_version"].get<int>() == kCheckpointVersion;
  if (!version_ok) {
    throw VersionError("unsupported checkpoint format version " +
                       (manifest.contains("format_version") ? manifest["format_version"].dump() : std::string("(missing)")));
  }
  Checkpoint ck;
  ck.config = TrainConfig::from_map(manifest.at("config").get<std::map<std::string, std::string>>());
  build_layout(ck.params, ck.config.model);
  const auto & listed = manifest.at("params");
  if (listed.size() != ck.params.count()) {
    throw VersionError("checkpoint lists " + std::to_string(listed.size()) + " parameters, the configuration defines " +
                       std::to_string(ck.params.count()));
  }
  for (std::size_t i = 0; i < listed.size(); ++i) {
    const auto name = listed[i].at("name").get<std::string>();
    const auto shape = listed[i].at("shape").get<Shape>();
    if (name != ck.params.name(i) || shape != ck.params.spec(i).shape) {
      throw VersionError("checkpoint parameter " + name + " " + shape_str(shape) + " does not match " +
                         ck.params.name(i) + " " + shape_str(ck.params.spec(i).shape));
    }
  }
  const std::size_t count = ck.params.total_size();
  if (manifest.at("payload_bytes").get<std::size_t>() != count * 4) {
    throw FormatError("payload size disagrees with the parameter shapes");
  }
  ck.params.unflatten(detail::get_floats(in, count));
  if (manifest.contains("optimizer")) {
    const auto & o = manifest["optimizer"];
    OptimizerState st;
    st.step = o.at("step").get<long>();
    st.epoch = o.at("epoch").get<int>();
    st.m = detail::unflatten_like(ck.params, detail::get_floats(in, count));
    st.v = detail::unflatten_like(ck.params, detail::get_floats(in, count));
    ck.optimizer = std::move(st);
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint & ck, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  write_checkpoint(ck, out);
  if (!out) throw DataError("failed while writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace mart

#endif  // MART__CHECKPOINT_HPP_
