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

#ifndef MART__DECODER_HPP_
#define MART__DECODER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mart/config.hpp"
#include "mart/errors.hpp"
#include "mart/layers.hpp"

namespace mart
{

/**
 * @brief K independent prediction heads over [n0; n_pair; n_group].
 *
 * Each head is 3 d_n -> d_D -> d_D/2 -> T_f*2 with ReLU between layers and
 * emits per-agent offsets from the last observed position.
 */
struct Decoder
{
  std::vector<Mlp> heads;
  std::size_t horizon{0};

  template <class T>
  static Decoder create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_n, std::size_t d_dec,
    std::size_t t_f, std::size_t k)
  {
    Decoder d;
    d.horizon = t_f;
    for (std::size_t h = 0; h < k; ++h) {
      d.heads.push_back(
        Mlp::create(store, name + "." + std::to_string(h), {3 * d_n, d_dec, d_dec / 2, t_f * 2}));
    }
    return d;
  }

  /// One N x (T_f*2) output per head.
  template <class T>
  std::vector<Var<T>> operator()(Session<T> & s, Var<T> n0, Var<T> n_pair, Var<T> n_group) const
  {
    Var<T> x = concat_cols<T>({n0, n_pair, n_group});
    std::vector<Var<T>> out;
    out.reserve(heads.size());
    for (const auto & h : heads) {
      out.push_back(h(s, x));
    }
    return out;
  }
};

/// Per-point Euclidean errors of one head: (N*T_f) x 1.
template <class T>
Var<T> pointwise_errors(Var<T> head, Var<T> target)
{
  return row_l2_norm(reshape(sub(head, target), {head.size() / 2, 2}));
}

/**
 * @brief Best-of-K variety loss on the tape.
 *
 * per_scene: min over heads of the scene-mean point error.
 * per_point: mean over (agent, step) of the min over heads.
 * The adjoint reaches only the selected head (lowest index on ties).
 */
template <class T>
Var<T> variety_loss(const std::vector<Var<T>> & heads, Var<T> target, LossReduction reduction)
{
  if (heads.empty()) {
    throw DimensionError("variety loss needs at least one head");
  }
  for (const auto & h : heads) {
    if (h.size() != target.size()) {
      throw DimensionError("prediction and ground-truth shapes differ");
    }
  }
  std::vector<Var<T>> errs;
  errs.reserve(heads.size());
  for (const auto & h : heads) {
    errs.push_back(pointwise_errors(h, target));
  }
  if (reduction == LossReduction::per_point) {
    Var<T> all = errs.size() == 1 ? errs.front() : concat_cols(errs);
    return mean_all(row_min(all));
  }
  std::vector<Var<T>> means;
  means.reserve(errs.size());
  for (const auto & e : errs) {
    means.push_back(mean_all(e));
  }
  Var<T> row = means.size() == 1 ? means.front() : concat_cols(means);
  return row_min(row);
}

/// Variety loss on plain arrays: preds K x N x T_f x 2, gt N x T_f x 2.
template <class T>
double variety_loss(const Array<T> & preds, const Array<T> & gt, LossReduction reduction)
{
  if (preds.rank() != 4 || gt.rank() != 3 || preds.dim(1) != gt.dim(0) ||
      preds.dim(2) != gt.dim(1) || preds.dim(3) != 2 || gt.dim(2) != 2) {
    throw DimensionError("variety loss expects K x N x T_f x 2 predictions and N x T_f x 2 truth");
  }
  Tape<T> tape;
  const std::size_t k = preds.dim(0);
  const std::size_t per = gt.size();
  std::vector<Var<T>> heads;
  for (std::size_t h = 0; h < k; ++h) {
    std::vector<T> d(preds.data().begin() + static_cast<std::ptrdiff_t>(h * per),
                     preds.data().begin() + static_cast<std::ptrdiff_t>((h + 1) * per));
    heads.push_back(tape.constant(Array<T>({per}, std::move(d))));
  }
  Var<T> target = tape.constant(gt.reshaped({per}));
  return static_cast<double>(variety_loss(heads, target, reduction).value()[0]);
}

struct MetricReport
{
  double min_ade{0.0};
  double min_fde{0.0};
  int k{0};
  MetricMode mode{MetricMode::joint};
};

/**
 * @brief minADE_k / minFDE_k over the first k heads.
 *
 * marginal: per agent min over heads, then mean over agents.
 * joint:    min over heads of the scene-mean error.
 */
template <class T>
MetricReport min_ade_fde(const Array<T> & preds, const Array<T> & gt, MetricMode mode, int k = 0)
{
  if (preds.rank() != 4 || gt.rank() != 3 || preds.dim(1) != gt.dim(0) ||
      preds.dim(2) != gt.dim(1) || preds.dim(3) != 2 || gt.dim(2) != 2) {
    throw DimensionError("metrics expect K x N x T_f x 2 predictions and N x T_f x 2 truth");
  }
  const std::size_t heads = preds.dim(0);
  const std::size_t use = k <= 0 ? heads : static_cast<std::size_t>(k);
  if (use < 1) throw ConfigError("k must be at least 1");
  if (use > heads) {
    throw ConfigError(
      "k=" + std::to_string(use) + " exceeds the " + std::to_string(heads) + " decoder heads");
  }
  const std::size_t n = gt.dim(0);
  const std::size_t tf = gt.dim(1);
  // ade[h][a], fde[h][a]
  std::vector<double> ade(use * n, 0.0);
  std::vector<double> fde(use * n, 0.0);
  for (std::size_t h = 0; h < use; ++h) {
    for (std::size_t a = 0; a < n; ++a) {
      double acc = 0.0;
      for (std::size_t t = 0; t < tf; ++t) {
        const std::size_t g = (a * tf + t) * 2;
        const std::size_t p = h * n * tf * 2 + g;
        const double dx = static_cast<double>(preds[p]) - static_cast<double>(gt[g]);
        const double dy = static_cast<double>(preds[p + 1]) - static_cast<double>(gt[g + 1]);
        const double dist = std::sqrt(dx * dx + dy * dy);
        acc += dist;
        if (t + 1 == tf) fde[h * n + a] = dist;
      }
      ade[h * n + a] = acc / static_cast<double>(tf);
    }
  }
  MetricReport r;
  r.k = static_cast<int>(use);
  r.mode = mode;
  if (mode == MetricMode::marginal) {
    double sa = 0.0;
    double sf = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      double ba = std::numeric_limits<double>::infinity();
      double bf = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < use; ++h) {
        ba = std::min(ba, ade[h * n + a]);
        bf = std::min(bf, fde[h * n + a]);
      }
      sa += ba;
      sf += bf;
    }
    r.min_ade = sa / static_cast<double>(n);
    r.min_fde = sf / static_cast<double>(n);
  } else {
    r.min_ade = std::numeric_limits<double>::infinity();
    r.min_fde = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < use; ++h) {
      double sa = 0.0;
      double sf = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        sa += ade[h * n + a];
        sf += fde[h * n + a];
      }
      r.min_ade = std::min(r.min_ade, sa / static_cast<double>(n));
      r.min_fde = std::min(r.min_fde, sf / static_cast<double>(n));
    }
  }
  return r;
}

}  // namespace mart

#endif  // MART__DECODER_HPP_
