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

// Shared helpers for the test binaries.

#ifndef MART_TESTS_SUPPORT_HPP_
#define MART_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "mart/mart.hpp"

namespace mart::testing
{

inline Array<double> random_array(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Array<double> a(std::move(shape));
  for (auto & x : a.data()) x = d(rng);
  return a;
}

inline double max_abs_diff(const Array<double> & a, const Array<double> & b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Max relative error of tape gradients against central differences for a
/// scalar function of several input arrays.
inline double composite_grad_error(
  const std::function<Var<double>(Tape<double> &, const std::vector<Var<double>> &)> & f,
  std::vector<Array<double>> inputs, double eps = 1e-6)
{
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto & x : inputs) vars.push_back(tape.variable(x));
  Var<double> loss = f(tape, vars);
  backprop(tape, loss);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Array<double> g = tape.grad(vars[k]);
    for (std::size_t j = 0; j < inputs[k].size(); ++j) {
      auto eval = [&](double delta) {
        std::vector<Array<double>> moved = inputs;
        moved[k][j] += delta;
        Tape<double> t2;
        std::vector<Var<double>> v2;
        for (const auto & x : moved) v2.push_back(t2.variable(x));
        return f(t2, v2).value()[0];
      };
      const double num = (eval(eps) - eval(-eps)) / (2.0 * eps);
      worst = std::max(worst, relative_error(g[j], num));
    }
  }
  return worst;
}

/// Random permutation of 0..n-1.
inline std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed)
{
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Plain-loop reference layers, written without the tape so they can serve as
// independent oracles for the tape-based implementation.
using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const Array<double> & a)
{
  Mat m(a.rows(), std::vector<double>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) m[i][j] = a(i, j);
  }
  return m;
}

inline Mat ref_linear(const Mat & x, const ParameterStore<double> & store, const Linear & l)
{
  const Array<double> & w = store.value(l.weight);
  Mat y(x.size(), std::vector<double>(l.out, 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t o = 0; o < l.out; ++o) {
      double acc = l.has_bias() ? store.value(l.bias)[o] : 0.0;
      for (std::size_t c = 0; c < l.in; ++c) acc += x[i][c] * w(c, o);
      y[i][o] = acc;
    }
  }
  return y;
}

inline Mat ref_layer_norm(const Mat & x, const ParameterStore<double> & store, const Norm & n)
{
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i].size());
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= d;
    for (std::size_t c = 0; c < x[i].size(); ++c) {
      y[i][c] = (x[i][c] - mean) / std::sqrt(var + 1e-5) * store.value(n.gain)[c] + store.value(n.bias)[c];
    }
  }
  return y;
}

inline Mat ref_add(Mat a, const Mat & b)
{
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t c = 0; c < a[i].size(); ++c) a[i][c] += b[i][c];
  }
  return a;
}

inline Mat ref_update(const Mat & x, const Mat & residual, const ParameterStore<double> & store,
                      const TransformerUpdate & u)
{
  const Mat a = ref_layer_norm(ref_add(ref_linear(x, store, u.project), residual), store, u.norm1);
  Mat h = ref_linear(a, store, u.ffn.layers.at(0));
  for (auto & row : h) {
    for (double & v : row) v = std::max(v, 0.0);
  }
  const Mat z = ref_linear(h, store, u.ffn.layers.at(1));
  return ref_layer_norm(ref_add(z, a), store, u.norm2);
}

/// Multi-head scaled dot-product self-attention followed by the update block.
inline Mat vanilla_encoder_layer(const Mat & x, const ParameterStore<double> & store, const Linear & wq,
                                 const Linear & wk, const Linear & wv, const TransformerUpdate & u,
                                 std::size_t heads)
{
  const Mat q = ref_linear(x, store, wq);
  const Mat k = ref_linear(x, store, wk);
  const Mat v = ref_linear(x, store, wv);
  const std::size_t n = x.size();
  const std::size_t d = q.front().size();
  const std::size_t dh = d / heads;
  Mat ctx(n, std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> logit(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) logit[j] += q[i][c] * k[j][c];
        logit[j] /= std::sqrt(static_cast<double>(dh));
      }
      const double top = *std::max_element(logit.begin(), logit.end());
      double z = 0.0;
      for (double & l : logit) z += (l = std::exp(l - top));
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) ctx[i][c] += logit[j] / z * v[j][c];
      }
    }
  }
  return ref_update(ctx, x, store, u);
}

inline double max_abs_diff(const Array<double> & a, const Mat & b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t c = 0; c < b[i].size(); ++c) m = std::max(m, std::abs(a(i, c) - b[i][c]));
  }
  return m;
}

/// Zeroes a linear map (weight and bias).
inline void zero_linear(ParameterStore<double> & store, const Linear & l)
{
  for (double & v : store.value(l.weight).data()) v = 0.0;
  if (l.has_bias()) {
    for (double & v : store.value(l.bias).data()) v = 0.0;
  }
}

/// Randomizes every parameter, including biases and norm gains that start constant.
inline void randomize(ParameterStore<double> & store, std::uint64_t seed, double scale = 0.5)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (std::size_t i = 0; i < store.count(); ++i) {
    for (double & v : store.value(i).data()) v += d(rng);
  }
}

/// Row index of pair (i, j) after relabeling agents by p (new index a holds old agent p[a]).
inline std::vector<std::size_t> permuted_pairs(const std::vector<std::size_t> & p)
{
  const std::size_t n = p.size();
  std::vector<std::size_t> idx(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) idx[a * n + b] = p[a] * n + p[b];
  }
  return idx;
}

inline Array<double> take_rows(const Array<double> & x, const std::vector<std::size_t> & rows)
{
  Array<double> y({rows.size(), x.cols()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = x(rows[r], c);
  }
  return y;
}

/// max |b[h, a] - a[h, p[a]]| over K x N x T_f x 2 predictions.
inline double prediction_permutation_error(const Array<double> & a, const Array<double> & b,
                                           const std::vector<std::size_t> & p)
{
  const std::size_t k = a.dim(0);
  const std::size_t n = a.dim(1);
  const std::size_t row = a.dim(2) * a.dim(3);
  double m = 0.0;
  for (std::size_t h = 0; h < k; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < row; ++c) {
        m = std::max(m, std::abs(b[(h * n + i) * row + c] - a[(h * n + p[i]) * row + c]));
      }
    }
  }
  return m;
}

// Brute-force references: enumerate every head and reduce in the most direct way.
inline double point_error(const Array<double> & preds, const Array<double> & gt, std::size_t h, std::size_t a,
                   std::size_t t)
{
  const std::size_t n = gt.dim(0);
  const std::size_t tf = gt.dim(1);
  const double dx = preds[((h * n + a) * tf + t) * 2] - gt[(a * tf + t) * 2];
  const double dy = preds[((h * n + a) * tf + t) * 2 + 1] - gt[(a * tf + t) * 2 + 1];
  return std::hypot(dx, dy);
}

inline double brute_loss(const Array<double> & preds, const Array<double> & gt, LossReduction reduction)
{
  const std::size_t k = preds.dim(0);
  const std::size_t n = gt.dim(0);
  const std::size_t tf = gt.dim(1);
  if (reduction == LossReduction::per_scene) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < k; ++h) {
      double sum = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t t = 0; t < tf; ++t) sum += point_error(preds, gt, h, a, t);
      }
      best = std::min(best, sum / static_cast<double>(n * tf));
    }
    return best;
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t t = 0; t < tf; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < k; ++h) best = std::min(best, point_error(preds, gt, h, a, t));
      sum += best;
    }
  }
  return sum / static_cast<double>(n * tf);
}

inline std::pair<double, double> brute_metrics(const Array<double> & preds, const Array<double> & gt, MetricMode mode,
                                        std::size_t k)
{
  const std::size_t n = gt.dim(0);
  const std::size_t tf = gt.dim(1);
  auto ade = [&](std::size_t h, std::size_t a) {
    double s = 0.0;
    for (std::size_t t = 0; t < tf; ++t) s += point_error(preds, gt, h, a, t);
    return s / static_cast<double>(tf);
  };
  auto fde = [&](std::size_t h, std::size_t a) { return point_error(preds, gt, h, a, tf - 1); };
  double out_ade = 0.0;
  double out_fde = 0.0;
  if (mode == MetricMode::marginal) {
    for (std::size_t a = 0; a < n; ++a) {
      double ba = 1e300;
      double bf = 1e300;
      for (std::size_t h = 0; h < k; ++h) {
        ba = std::min(ba, ade(h, a));
        bf = std::min(bf, fde(h, a));
      }
      out_ade += ba / static_cast<double>(n);
      out_fde += bf / static_cast<double>(n);
    }
  } else {
    out_ade = out_fde = 1e300;
    for (std::size_t h = 0; h < k; ++h) {
      double sa = 0.0;
      double sf = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        sa += ade(h, a);
        sf += fde(h, a);
      }
      out_ade = std::min(out_ade, sa / static_cast<double>(n));
      out_fde = std::min(out_fde, sf / static_cast<double>(n));
    }
  }
  return {out_ade, out_fde};
}


/// A configuration between the gradient-check size and the full model.
inline ModelConfig small_config()
{
  ModelConfig c;
  c.t_p = 6;
  c.t_f = 5;
  c.d_n = 16;
  c.d_e = 12;
  c.d_h = 24;
  c.d_dec = 16;
  c.layers = 2;
  c.heads = 4;
  c.k = 3;
  return c;
}

}  // namespace mart::testing

#endif  // MART_TESTS_SUPPORT_HPP_
