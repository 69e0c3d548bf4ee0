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

#ifndef MART__GRADCHECK_HPP_
#define MART__GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mart/age.hpp"
#include "mart/errors.hpp"
#include "mart/model.hpp"
#include "mart/params.hpp"

namespace mart
{

/// Central differences (f(p+eps) - f(p-eps)) / (2 eps) for every scalar parameter.
template <class F>
Gradients<double> finite_diff_grad(F && f, ParameterStore<double> & params, double eps)
{
  if (!(eps > 0.0)) {
    throw ConfigError("finite difference step must be positive");
  }
  Gradients<double> g = zero_gradients(params);
  for (std::size_t i = 0; i < params.count(); ++i) {
    Array<double> & v = params.value(i);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double saved = v[j];
      v[j] = saved + eps;
      const double up = f(static_cast<const ParameterStore<double> &>(params));
      v[j] = saved - eps;
      const double down = f(static_cast<const ParameterStore<double> &>(params));
      v[j] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw EvaluationError("objective is not finite near " + params.name(i));
      }
      g[i][j] = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

inline double relative_error(double analytic, double numeric)
{
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

/// The tiny configuration used for end-to-end gradient checks.
inline ModelConfig gradcheck_config()
{
  ModelConfig c;
  c.d_in = 2;
  c.t_p = 4;
  c.t_f = 3;
  c.d_n = 8;
  c.d_e = 8;
  c.d_h = 16;
  c.d_dec = 16;
  c.layers = 1;
  c.heads = 2;
  c.k = 2;
  return c;
}

/// Random-walk scene with `agents` agents matching cfg's horizons.
inline Scene random_scene(const ModelConfig & cfg, std::size_t agents, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 0.3);
  std::uniform_real_distribution<double> start(-3.0, 3.0);
  const auto tp = static_cast<std::size_t>(cfg.t_p);
  const auto tf = static_cast<std::size_t>(cfg.t_f);
  Scene s;
  s.id = "random-" + std::to_string(seed);
  s.obs = Array<double>({agents, tp, 2});
  s.fut = Array<double>({agents, tf, 2});
  for (std::size_t a = 0; a < agents; ++a) {
    double x = start(rng);
    double y = start(rng);
    const double vx = step(rng);
    const double vy = step(rng);
    for (std::size_t t = 0; t < tp + tf; ++t) {
      x += vx + 0.3 * step(rng);
      y += vy + 0.3 * step(rng);
      Array<double> & dst = t < tp ? s.obs : *s.fut;
      const std::size_t tt = t < tp ? t : t - tp;
      const std::size_t len = t < tp ? tp : tf;
      dst[(a * len + tt) * 2] = x;
      dst[(a * len + tt) * 2 + 1] = y;
    }
  }
  return s;
}

struct GradcheckOptions
{
  std::uint64_t seed{0};
  double eps{1e-5};
  double tol{1e-4};
  double age_tol{1e-10};
  std::size_t agents{4};
  LossReduction reduction{LossReduction::per_scene};
  /// Move the threshold to the widest gap between off-diagonal affinities so G is non-trivial.
  bool place_threshold{true};
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(Gradients<double> &, const ParameterStore<double> &)> tamper;
};

struct ParamGroupError
{
  std::string name;
  double max_rel_error{0.0};
  std::size_t checked{0};
};

struct GradcheckReport
{
  bool passed{false};
  double max_rel_error{0.0};
  std::string worst_param;
  std::vector<ParamGroupError> groups;
  /// Same comparison with the step replaced by its smooth surrogate, exercising the affinity path.
  double smooth_max_rel_error{0.0};
  std::string smooth_worst_param;
  /// max |dL/dx - dL/dG * ste_grad(x)| over the N x N step inputs x = A - Theta.
  double age_adjoint_error{0.0};
  /// |dL/draw - (-(sum dL/dx) * (1 - Theta^2))|.
  double threshold_adjoint_error{0.0};
  std::size_t step_inputs_in_support{0};
  std::size_t skipped_incidence_flips{0};
  double threshold{0.0};
  /// Largest |analytic - numeric| among scalars that exceeded the relative tolerance.
  double max_abs_error_over_tol{0.0};
  std::string failure;
};

namespace detail
{

inline Array<double> incidence_of(const ModelLayout & layout, const ModelConfig & cfg,
                                  const ParameterStore<double> & p, const Scene & scene)
{
  Tape<double> tape;
  Session<double> s(tape, p);
  EncoderOutput<double> e = encode(s, layout, cfg, s.constant(model_inputs<double>(scene, cfg.d_in)));
  return e.groups.incidence.value();
}

}  // namespace detail

/// Sets Theta to the midpoint of the widest gap between sorted off-diagonal affinities.
inline double place_threshold_in_gap(
  const ModelLayout & layout, const ModelConfig & cfg, ParameterStore<double> & params, const Scene & scene)
{
  Tape<double> tape;
  Session<double> s(tape, params);
  EncoderOutput<double> e = encode(s, layout, cfg, s.constant(model_inputs<double>(scene, cfg.d_in)));
  const Array<double> & a = e.groups.affinity.value();
  const std::size_t n = a.rows();
  std::vector<double> off;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) off.push_back(a[i * n + j]);
  }
  double theta = std::tanh(static_cast<double>(params.value(layout.age.threshold_raw)[0]));
  if (off.size() >= 2) {
    std::sort(off.begin(), off.end());
    double best = -1.0;
    for (std::size_t i = 0; i + 1 < off.size(); ++i) {
      if (off[i + 1] - off[i] > best) {
        best = off[i + 1] - off[i];
        theta = 0.5 * (off[i] + off[i + 1]);
      }
    }
  }
  theta = std::clamp(theta, -0.999, 0.999);
  params.value(layout.age.threshold_raw)[0] = std::atanh(theta);
  return theta;
}

/**
 * @brief End-to-end double-precision gradient check.
 *
 * 1. The step is non-differentiable, so central differences cannot see the
 *    straight-through path. Tape gradients with the step's adjoint detached
 *    are compared against finite differences; scalars whose perturbation
 *    flips an entry of G are skipped and counted.
 * 2. The straight-through adjoint itself is checked against the closed-form
 *    chain rule dL/dx = dL/dG * ste_grad(x) and dL/draw = -sum(dL/dx)(1 - Theta^2).
 * 3. With the step replaced by its smooth surrogate (whose exact derivative
 *    is the triangle estimator) the whole model, affinity included, is
 *    compared against finite differences.
 */
inline GradcheckReport gradcheck(const ModelConfig & cfg, const GradcheckOptions & opts = {})
{
  GradcheckReport report;
  MartModel<double> model(cfg, opts.seed);
  ParameterStore<double> params = model.params();
  const ModelLayout & layout = model.layout();
  const Scene scene = random_scene(cfg, opts.agents, opts.seed + 7919);
  if (opts.place_threshold) {
    report.threshold = place_threshold_in_gap(layout, cfg, params, scene);
  }

  auto analytic = [&](StepGradient mode) {
    Tape<double> tape;
    Session<double> s(tape, params);
    ForwardOptions fo;
    fo.step_gradient = mode;
    Var<double> loss = scene_loss(s, layout, cfg, scene, opts.reduction, fo);
    backprop(tape, loss);
    return s.gradients();
  };
  auto objective = [&](StepGradient mode) {
    return [&, mode](const ParameterStore<double> & p) {
      Tape<double> tape;
      Session<double> s(tape, p);
      ForwardOptions fo;
      fo.step_gradient = mode;
      return scene_loss(s, layout, cfg, scene, opts.reduction, fo).value()[0];
    };
  };

  // 1. detached straight-through path vs finite differences
  Gradients<double> detached = analytic(StepGradient::detached);
  if (opts.tamper) opts.tamper(detached, params);
  const Array<double> g0 = detail::incidence_of(layout, cfg, params, scene);
  auto compare = [&](const Gradients<double> & ana, StepGradient mode, bool skip_flips,
                     double & worst, std::string & worst_name, std::vector<ParamGroupError> * groups) {
    auto f = objective(mode);
    worst = 0.0;
    for (std::size_t i = 0; i < params.count(); ++i) {
      ParamGroupError ge{params.name(i), 0.0, 0};
      Array<double> & v = params.value(i);
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double saved = v[j];
        v[j] = saved + opts.eps;
        const double up = f(params);
        const bool flip_up = skip_flips && !(detail::incidence_of(layout, cfg, params, scene) == g0);
        v[j] = saved - opts.eps;
        const double down = f(params);
        const bool flip_down = skip_flips && !(detail::incidence_of(layout, cfg, params, scene) == g0);
        v[j] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
          throw EvaluationError("objective is not finite near " + params.name(i));
        }
        if (flip_up || flip_down) {
          ++report.skipped_incidence_flips;
          continue;
        }
        const double num = (up - down) / (2.0 * opts.eps);
        const double rel = relative_error(ana[i][j], num);
        ge.max_rel_error = std::max(ge.max_rel_error, rel);
        ++ge.checked;
        if (rel > opts.tol) {
          report.max_abs_error_over_tol =
            std::max(report.max_abs_error_over_tol, std::abs(ana[i][j] - num));
        }
        if (rel > worst) {
          worst = rel;
          worst_name = params.name(i) + "[" + std::to_string(j) + "]";
        }
      }
      if (groups) groups->push_back(ge);
    }
  };
  compare(detached, StepGradient::detached, true, report.max_rel_error, report.worst_param, &report.groups);

  // 2. straight-through adjoint vs closed-form chain rule
  {
    Tape<double> tape;
    Session<double> s(tape, params);
    ForwardResult<double> r = forward(s, layout, cfg, scene);
    Var<double> loss = variety_loss(r.heads, s.constant(future_offsets<double>(scene)), opts.reduction);
    backprop(tape, loss);
    const GroupEstimate<double> & ge = r.enc.groups;
    const Array<double> x = ge.shifted.value();
    const Array<double> dx = tape.grad(ge.shifted);
    const Array<double> dg = tape.grad(ge.incidence);
    double sum_dx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double expect = dg[i] * ste_grad(x[i], cfg.ste_variant);
      report.age_adjoint_error = std::max(report.age_adjoint_error, std::abs(dx[i] - expect));
      if (std::abs(x[i]) <= 0.5) ++report.step_inputs_in_support;
      sum_dx += dx[i];
    }
    const double theta = ge.threshold.value()[0];
    const double draw = s.gradients()[layout.age.threshold_raw][0];
    report.threshold_adjoint_error = std::abs(draw - (-sum_dx * (1.0 - theta * theta)));
  }

  // 3. smooth surrogate, everything differentiable
  if (cfg.ste_variant == SteVariant::triangle) {
    Gradients<double> smooth = analytic(StepGradient::smooth);
    compare(smooth, StepGradient::smooth, false, report.smooth_max_rel_error, report.smooth_worst_param, nullptr);
  }

  report.passed = true;
  if (report.max_rel_error > opts.tol) {
    report.passed = false;
    report.failure = "gradient mismatch at " + report.worst_param;
  } else if (report.smooth_max_rel_error > opts.tol) {
    report.passed = false;
    report.failure = "smooth-surrogate gradient mismatch at " + report.smooth_worst_param;
  } else if (report.age_adjoint_error > opts.age_tol || report.threshold_adjoint_error > opts.age_tol) {
    report.passed = false;
    report.failure = "straight-through adjoint differs from the closed-form chain rule";
  }
  return report;
}

}  // namespace mart

#endif  // MART__GRADCHECK_HPP_
