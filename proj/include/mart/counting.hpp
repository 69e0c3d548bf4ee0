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

#ifndef MART__COUNTING_HPP_
#define MART__COUNTING_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mart/config.hpp"
#include "mart/model.hpp"
#include "mart/params.hpp"

namespace mart
{

/// Total learnable scalars of a configuration, read off a freshly built store.
inline std::uint64_t count_params(const ModelConfig & cfg)
{
  ParameterStore<float> store;
  build_layout(store, cfg);
  return store.total_size();
}

struct MacBreakdown
{
  std::vector<std::pair<std::string, std::uint64_t>> parts;

  std::uint64_t total() const
  {
    std::uint64_t t = 0;
    for (const auto & p : parts) t += p.second;
    return t;
  }
};

/**
 * @brief Multiply-accumulates of one forward pass over `agents` agents.
 *
 * Counts every linear map (rows x in x out) and the attention score and
 * context products. Norms, activations, softmax, the affinity matrix and the
 * group-membership means are not counted.
 */
inline MacBreakdown count_mac_breakdown(const ModelConfig & cfg, std::uint64_t agents)
{
  cfg.validate();
  const std::uint64_t n = agents;
  const std::uint64_t p = n * n;
  const auto d_in = static_cast<std::uint64_t>(cfg.d_in);
  const auto t_p = static_cast<std::uint64_t>(cfg.t_p);
  const auto t_f = static_cast<std::uint64_t>(cfg.t_f);
  const auto d_n = static_cast<std::uint64_t>(cfg.d_n);
  const auto d_e = static_cast<std::uint64_t>(cfg.d_e);
  const auto d_h = static_cast<std::uint64_t>(cfg.d_h);
  const auto d_d = static_cast<std::uint64_t>(cfg.d_dec);
  const auto k = static_cast<std::uint64_t>(cfg.k);
  const auto layers = static_cast<std::uint64_t>(cfg.layers);

  // project, then FFN width -> hidden -> width
  auto update = [](std::uint64_t rows, std::uint64_t in, std::uint64_t width, std::uint64_t hidden) {
    return rows * (in * width + 2 * width * hidden);
  };

  MacBreakdown b;
  b.parts.emplace_back("node_init", n * t_p * d_in * d_n + n * t_p * d_n * d_n);
  b.parts.emplace_back("pair_init", p * (2 * d_n * d_h + d_h * d_e));
  b.parts.emplace_back("hyper_init", n * (d_n * d_h + d_h * d_e));

  const std::uint64_t prt = 3 * n * d_n * d_n + 3 * p * d_e * d_n  // q, k, v
                            + 2 * p * d_n                          // scores and context
                            + update(n, d_n, d_n, d_h)             // node update
                            + p * (2 * d_e + 2 * d_n) * d_h        // message
                            + update(p, d_h, d_e, d_h);            // edge update
  const std::uint64_t hrt = 3 * n * d_n * d_n + 3 * n * d_e * d_n
                            + 2 * n * n * d_n
                            + update(n, d_n, d_n, d_h)
                            + n * (d_e + d_n) * d_h
                            + update(n, d_h, d_e, d_h);
  b.parts.emplace_back("prt", layers * prt);
  b.parts.emplace_back("hrt", layers * hrt);
  b.parts.emplace_back("decoder", k * n * (3 * d_n * d_d + d_d * (d_d / 2) + (d_d / 2) * t_f * 2));
  return b;
}

inline std::uint64_t count_macs(const ModelConfig & cfg, std::uint64_t agents)
{
  return count_mac_breakdown(cfg, agents).total();
}

/// The configuration whose counts are reported for pedestrian data.
inline ModelConfig eth_ucy_config()
{
  ModelConfig c;
  c.d_in = 2;
  c.t_p = 8;
  c.t_f = 12;
  c.d_n = 64;
  c.d_e = 64;
  c.d_h = 128;
  c.d_dec = 128;
  c.layers = 4;
  c.heads = 8;
  c.k = 20;
  return c;
}

}  // namespace mart

#endif  // MART__COUNTING_HPP_
