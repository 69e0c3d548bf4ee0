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

#ifndef MART__SCENE_HPP_
#define MART__SCENE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mart/array.hpp"
#include "mart/errors.hpp"

namespace mart
{

/// One prediction instance. Coordinates are absolute positions in meters.
struct Scene
{
  std::string id;
  Array<double> obs;                      // N x T_p x 2
  std::optional<Array<double>> fut;       // N x T_f x 2
  std::optional<Array<int>> group_truth;  // N x N, planted membership (synthetic only)
  std::vector<std::string> agent_ids;     // empty, or one per agent

  std::size_t agents() const { return obs.rank() == 3 ? obs.dim(0) : 0; }
  std::size_t t_p() const { return obs.rank() == 3 ? obs.dim(1) : 0; }
  std::size_t t_f() const { return fut ? fut->dim(1) : 0; }
  bool labeled() const { return fut.has_value(); }

  void validate() const
  {
    if (obs.rank() != 3 || obs.dim(2) != 2) {
      throw FormatError("scene " + id + ": obs must be N x T_p x 2");
    }
    if (agents() < 1) {
      throw FormatError("scene " + id + ": no agents");
    }
    if (t_p() < 2) {
      throw FormatError("scene " + id + ": T_p must be at least 2");
    }
    if (!all_finite(obs)) {
      throw FormatError("scene " + id + ": non-finite observation");
    }
    if (fut) {
      if (fut->rank() != 3 || fut->dim(0) != agents() || fut->dim(2) != 2) {
        throw FormatError("scene " + id + ": fut must be N x T_f x 2");
      }
      if (!all_finite(*fut)) {
        throw FormatError("scene " + id + ": non-finite future");
      }
    }
    if (!agent_ids.empty() && agent_ids.size() != agents()) {
      throw FormatError("scene " + id + ": agent id count differs from agent count");
    }
    if (group_truth) {
      if (group_truth->rank() != 2 || group_truth->dim(0) != agents() ||
          group_truth->dim(1) != agents()) {
        throw FormatError("scene " + id + ": group_truth must be N x N");
      }
    }
  }
};

/// Per-step displacements of an N x T x 2 track; the first step is zero.
inline Array<double> to_displacements(const Array<double> & pos)
{
  const std::size_t n = pos.dim(0);
  const std::size_t t = pos.dim(1);
  Array<double> out(pos.shape());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t s = 1; s < t; ++s) {
      for (std::size_t c = 0; c < 2; ++c) {
        out[(a * t + s) * 2 + c] = pos[(a * t + s) * 2 + c] - pos[(a * t + s - 1) * 2 + c];
      }
    }
  }
  return out;
}

/// Inverse of to_displacements given each agent's first position (N x 2).
inline Array<double> from_displacements(const Array<double> & disp, const Array<double> & origin)
{
  const std::size_t n = disp.dim(0);
  const std::size_t t = disp.dim(1);
  Array<double> out(disp.shape());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < 2; ++c) {
      double acc = origin[a * 2 + c];
      out[(a * t) * 2 + c] = acc;
      for (std::size_t s = 1; s < t; ++s) {
        acc += disp[(a * t + s) * 2 + c];
        out[(a * t + s) * 2 + c] = acc;
      }
    }
  }
  return out;
}

/// Last observed position of each agent, N x 2.
inline Array<double> last_observed(const Scene & scene)
{
  const std::size_t n = scene.agents();
  const std::size_t t = scene.t_p();
  Array<double> out({n, 2});
  for (std::size_t a = 0; a < n; ++a) {
    out[a * 2] = scene.obs[(a * t + t - 1) * 2];
    out[a * 2 + 1] = scene.obs[(a * t + t - 1) * 2 + 1];
  }
  return out;
}

/**
 * @brief Model input tensor N x T_p x d_in.
 *
 * d_in = 2: relative displacements. d_in = 4: absolute positions followed by
 * relative displacements.
 */
template <class T>
Array<T> model_inputs(const Scene & scene, int d_in)
{
  const std::size_t n = scene.agents();
  const std::size_t t = scene.t_p();
  const Array<double> disp = to_displacements(scene.obs);
  const auto din = static_cast<std::size_t>(d_in);
  Array<T> out({n, t, din});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t s = 0; s < t; ++s) {
      const std::size_t src = (a * t + s) * 2;
      T * dst = out.data().data() + (a * t + s) * din;
      if (d_in == 2) {
        dst[0] = static_cast<T>(disp[src]);
        dst[1] = static_cast<T>(disp[src + 1]);
      } else if (d_in == 4) {
        dst[0] = static_cast<T>(scene.obs[src]);
        dst[1] = static_cast<T>(scene.obs[src + 1]);
        dst[2] = static_cast<T>(disp[src]);
        dst[3] = static_cast<T>(disp[src + 1]);
      } else {
        throw ConfigError("d_in must be 2 or 4");
      }
    }
  }
  return out;
}

/// Future positions relative to each agent's last observed position, N x (T_f * 2).
template <class T>
Array<T> future_offsets(const Scene & scene)
{
  if (!scene.fut) {
    throw DataError("scene " + scene.id + " has no future trajectory");
  }
  const std::size_t n = scene.agents();
  const std::size_t tf = scene.t_f();
  const Array<double> last = last_observed(scene);
  Array<T> out({n, tf * 2});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t s = 0; s < tf; ++s) {
      for (std::size_t c = 0; c < 2; ++c) {
        out[a * tf * 2 + s * 2 + c] =
          static_cast<T>((*scene.fut)[(a * tf + s) * 2 + c] - last[a * 2 + c]);
      }
    }
  }
  return out;
}

/// Applies a permutation to the agents: agent perm[i] of `scene` becomes agent i.
inline Scene permute_agents(const Scene & scene, const std::vector<std::size_t> & perm)
{
  const std::size_t n = scene.agents();
  Scene out;
  out.id = scene.id;
  auto permute_track = [&](const Array<double> & a) {
    Array<double> r(a.shape());
    const std::size_t row = a.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(perm[i] * row), row,
                  r.data().begin() + static_cast<std::ptrdiff_t>(i * row));
    }
    return r;
  };
  out.obs = permute_track(scene.obs);
  if (!scene.agent_ids.empty()) {
    for (std::size_t i = 0; i < n; ++i) out.agent_ids.push_back(scene.agent_ids[perm[i]]);
  }
  if (scene.fut) {
    out.fut = permute_track(*scene.fut);
  }
  if (scene.group_truth) {
    Array<int> g({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        g[i * n + j] = (*scene.group_truth)[perm[i] * n + perm[j]];
      }
    }
    out.group_truth = g;
  }
  return out;
}

}  // namespace mart

#endif  // MART__SCENE_HPP_
