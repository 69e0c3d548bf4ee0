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

#ifndef MART__EVAL_HPP_
#define MART__EVAL_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mart/decoder.hpp"
#include "mart/errors.hpp"
#include "mart/model.hpp"
#include "mart/scene.hpp"
#include "mart/train.hpp"

namespace mart
{

inline nlohmann::json to_json(const MetricReport & r)
{
  return {{"min_ade", r.min_ade}, {"min_fde", r.min_fde}, {"k", r.k}, {"mode", to_string(r.mode)}};
}

/// Repeats each agent's last observed displacement; returns 1 x N x T_f x 2.
inline Array<double> constant_velocity(const Scene & scene, std::size_t t_f)
{
  const std::size_t n = scene.agents();
  const std::size_t tp = scene.t_p();
  Array<double> out({1, n, t_f, 2});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double last = scene.obs[(a * tp + tp - 1) * 2 + c];
      const double vel = last - scene.obs[(a * tp + tp - 2) * 2 + c];
      for (std::size_t t = 0; t < t_f; ++t) {
        out[(a * t_f + t) * 2 + c] = last + static_cast<double>(t + 1) * vel;
      }
    }
  }
  return out;
}

namespace detail
{

inline MetricReport mean_reports(const std::vector<MetricReport> & rs)
{
  MetricReport out = rs.front();
  out.min_ade = 0.0;
  out.min_fde = 0.0;
  for (const auto & r : rs) {
    out.min_ade += r.min_ade;
    out.min_fde += r.min_fde;
  }
  out.min_ade /= static_cast<double>(rs.size());
  out.min_fde /= static_cast<double>(rs.size());
  return out;
}

}  // namespace detail

/// Dataset mean of per-scene reports over the first k heads (k = 0: all heads).
template <class T>
MetricReport evaluate(const MartModel<T> & model, const std::vector<Scene> & scenes, int k, MetricMode mode)
{
  if (scenes.empty()) throw DataError("cannot evaluate an empty scene list");
  if (k > model.config().k) {
    throw ConfigError("k=" + std::to_string(k) + " exceeds the " + std::to_string(model.config().k) + " decoder heads");
  }
  check_scenes(scenes, model.config(), true);
  std::vector<MetricReport> rs;
  rs.reserve(scenes.size());
  for (const auto & s : scenes) {
    rs.push_back(min_ade_fde(model.predict(s), *s.fut, mode, k));
  }
  return detail::mean_reports(rs);
}

inline MetricReport evaluate_constant_velocity(const std::vector<Scene> & scenes, MetricMode mode)
{
  if (scenes.empty()) throw DataError("cannot evaluate an empty scene list");
  std::vector<MetricReport> rs;
  for (const auto & s : scenes) {
    if (!s.labeled()) throw DataError("scene " + s.id + " is unlabeled");
    rs.push_back(min_ade_fde(constant_velocity(s, s.t_f()), *s.fut, mode));
  }
  return detail::mean_reports(rs);
}

/// Pairwise co-membership scores; a pair (i < j) counts as grouped if G_ij or G_ji is set.
struct GroupScore
{
  std::size_t true_pos{0};
  std::size_t false_pos{0};
  std::size_t false_neg{0};

  /// Vacuously 1 when nothing was predicted as grouped.
  double precision() const
  {
    return true_pos + false_pos == 0 ? 1.0 : static_cast<double>(true_pos) / static_cast<double>(true_pos + false_pos);
  }
  double recall() const
  {
    return true_pos + false_neg == 0 ? 1.0 : static_cast<double>(true_pos) / static_cast<double>(true_pos + false_neg);
  }

  void add(const Array<int> & predicted, const Array<int> & truth)
  {
    const std::size_t n = truth.dim(0);
    if (predicted.shape() != truth.shape()) throw DimensionError("group matrices differ in shape");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool p = predicted[i * n + j] != 0 || predicted[j * n + i] != 0;
        const bool t = truth[i * n + j] != 0 || truth[j * n + i] != 0;
        true_pos += p && t;
        false_pos += p && !t;
        false_neg += !p && t;
      }
    }
  }
};

inline nlohmann::json prediction_json(const Scene & scene, const Array<double> & preds)
{
  const std::size_t k = preds.dim(0);
  const std::size_t n = preds.dim(1);
  const std::size_t tf = preds.dim(2);
  nlohmann::json heads = nlohmann::json::array();
  for (std::size_t h = 0; h < k; ++h) {
    nlohmann::json agents = nlohmann::json::array();
    for (std::size_t a = 0; a < n; ++a) {
      nlohmann::json track = nlohmann::json::array();
      for (std::size_t t = 0; t < tf; ++t) {
        const std::size_t o = ((h * n + a) * tf + t) * 2;
        track.push_back({preds[o], preds[o + 1]});
      }
      agents.push_back(std::move(track));
    }
    heads.push_back(std::move(agents));
  }
  return {{"scene_id", scene.id}, {"k", k}, {"preds", std::move(heads)}};
}

inline nlohmann::json groups_json(const Scene & scene, const Array<int> & g)
{
  const std::size_t n = g.dim(0);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(g[i * n + j]);
    rows.push_back(std::move(row));
  }
  return {{"scene_id", scene.id}, {"G", std::move(rows)}};
}

}  // namespace mart

#endif  // MART__EVAL_HPP_
