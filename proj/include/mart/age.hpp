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

#ifndef MART__AGE_HPP_
#define MART__AGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "mart/config.hpp"
#include "mart/errors.hpp"
#include "mart/params.hpp"
#include "mart/tape.hpp"

namespace mart
{

/// Norms below this are clamped before dividing.
inline constexpr double kAffinityNormFloor = 1e-8;

/// Unit step: 1 iff x >= 0.
constexpr int unit_step(double x) noexcept { return x >= 0.0 ? 1 : 0; }

/**
 * @brief Surrogate derivative of the unit step.
 *
 *  - triangle:            2 - 4|x| on |x| <= 0.5, else 0
 *  - clipped_passthrough: 1 on |x| <= 0.5, else 0
 *  - long_tailed:         2 - 8|x| on |x| <= 0.2, 0.4 on 0.2 < |x| <= 0.5, else 0
 *    (the long-tailed sign estimator rescaled to the step's support)
 */
inline double ste_grad(double x, SteVariant variant)
{
  const double ax = std::abs(x);
  switch (variant) {
    case SteVariant::triangle:
      return ax <= 0.5 ? 2.0 - 4.0 * ax : 0.0;
    case SteVariant::clipped_passthrough:
      return ax <= 0.5 ? 1.0 : 0.0;
    case SteVariant::long_tailed:
      if (ax <= 0.2) return 2.0 - 8.0 * ax;
      if (ax <= 0.5) return 0.4;
      return 0.0;
  }
  throw ConfigError("unknown STE variant");
}

/// Piecewise-quadratic smooth approximation of the step whose derivative is the triangle estimator.
inline double smooth_step(double x) noexcept
{
  if (x < -0.5) return 0.0;
  if (x < 0.0) return 0.5 + 2.0 * x + 2.0 * x * x;
  if (x < 0.5) return 0.5 + 2.0 * x - 2.0 * x * x;
  return 1.0;
}

/// Plain cosine affinity A_ij = n_i . n_j / (|n_i| |n_j|).
template <class T>
Array<T> cosine_affinity(const Array<T> & nodes)
{
  const std::size_t n = nodes.rows();
  const std::size_t d = nodes.cols();
  Array<T> unit(nodes.shape());
  for (std::size_t i = 0; i < n; ++i) {
    T ss{0};
    for (std::size_t c = 0; c < d; ++c) ss += nodes[i * d + c] * nodes[i * d + c];
    const T nr = std::max(std::sqrt(ss), static_cast<T>(kAffinityNormFloor));
    for (std::size_t c = 0; c < d; ++c) unit[i * d + c] = nodes[i * d + c] / nr;
  }
  Array<T> a({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T dot{0};
      for (std::size_t c = 0; c < d; ++c) dot += unit[i * d + c] * unit[j * d + c];
      a[i * n + j] = dot;
    }
  }
  return a;
}

template <class T>
Var<T> cosine_affinity(Var<T> nodes)
{
  Var<T> unit = normalize_rows(nodes, kAffinityNormFloor);
  return matmul(unit, transpose(unit));
}

/// How the step's adjoint is formed.
enum class StepGradient
{
  straight_through,  // forward step, backward ste_grad
  detached,          // forward step, zero adjoint (G treated as a constant)
  smooth,            // forward smooth_step, backward its exact derivative
};

struct AgeOptions
{
  SteVariant variant{SteVariant::triangle};
  StepGradient gradient{StepGradient::straight_through};
};

template <class T>
CustomGradRegion<T> step_region(const AgeOptions & opts)
{
  CustomGradRegion<T> r;
  if (opts.gradient == StepGradient::smooth) {
    r.forward = [](const Array<T> & x) {
      Array<T> y(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(smooth_step(x[i]));
      return y;
    };
  } else {
    r.forward = [](const Array<T> & x) {
      Array<T> y(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(unit_step(x[i]));
      // the ego agent always belongs to its own hyperedge, even for a zero embedding
      if (x.rank() == 2 && x.rows() == x.cols()) {
        for (std::size_t i = 0; i < x.rows(); ++i) y[i * x.cols() + i] = T{1};
      }
      return y;
    };
  }
  const SteVariant variant = opts.gradient == StepGradient::smooth ? SteVariant::triangle : opts.variant;
  const bool detached = opts.gradient == StepGradient::detached;
  r.backward = [variant, detached](const Array<T> & x, const Array<T> &, const Array<T> & dy) {
    Array<T> gx(x.shape());
    if (detached) return gx;
    for (std::size_t i = 0; i < x.size(); ++i) {
      gx[i] = dy[i] * static_cast<T>(ste_grad(x[i], variant));
    }
    return gx;
  };
  return r;
}

/// Intermediate values of one group estimation, kept for inspection and gradient checks.
template <class T>
struct GroupEstimate
{
  Var<T> affinity;   // A, N x N
  Var<T> threshold;  // Theta = tanh(raw), 1 x 1
  Var<T> shifted;    // A - Theta
  Var<T> incidence;  // G, N x N, G_ij = 1 iff agent i in hyperedge j
};

/**
 * @brief Adaptive group estimator.
 *
 * G_ij = U(A_ij - Theta) with Theta = tanh(raw). The step is wrapped in a
 * custom gradient region so the backward pass uses ste_grad.
 */
struct GroupEstimator
{
  std::size_t threshold_raw{0};

  template <class T>
  static GroupEstimator create(ParameterStore<T> & store, const std::string & name, double theta0)
  {
    GroupEstimator g;
    g.threshold_raw = store.add(name + ".threshold_raw", {1, 1}, Init::constant, std::atanh(theta0));
    return g;
  }

  template <class T>
  GroupEstimate<T> operator()(Session<T> & s, Var<T> nodes, const AgeOptions & opts) const
  {
    GroupEstimate<T> e;
    e.affinity = cosine_affinity(nodes);
    e.threshold = tanh(s.param(threshold_raw));
    e.shifted = sub_scalar(e.affinity, e.threshold);
    e.incidence = step_region<T>(opts)(e.shifted);
    return e;
  }
};

/// Forward-only group estimation on plain arrays.
template <class T>
Array<int> estimate_groups(const Array<T> & nodes, double theta)
{
  const Array<T> a = cosine_affinity(nodes);
  const std::size_t n = a.rows();
  Array<int> g({n, n});
  for (std::size_t i = 0; i < a.size(); ++i) {
    g[i] = unit_step(static_cast<double>(a[i]) - theta);
  }
  for (std::size_t i = 0; i < n; ++i) g[i * n + i] = 1;
  return g;
}

}  // namespace mart

#endif  // MART__AGE_HPP_
