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

#ifndef MART__TAPE_HPP_
#define MART__TAPE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mart/array.hpp"
#include "mart/errors.hpp"

namespace mart
{

template <class T>
class Tape;

/// Handle to a value recorded on a Tape.
template <class T>
struct Var
{
  Tape<T> * tape{nullptr};
  std::size_t id{0};

  const Array<T> & value() const { return tape->value(id); }
  const Shape & shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t size() const { return value().size(); }
};

/**
 * @brief Reverse-mode record of one forward pass.
 *
 * Every primitive appends a node holding its output and a closure that pushes
 * the node's adjoint into its inputs. backward() replays the closures in exact
 * reverse order of recording. A tape is single-threaded; build a fresh tape per
 * forward pass.
 */
template <class T>
class Tape
{
public:
  using Backward = std::function<void(Tape &, std::size_t)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  Var<T> leaf(Array<T> value, bool requires_grad)
  {
    return push(std::move(value), requires_grad, nullptr);
  }

  Var<T> constant(Array<T> value) { return leaf(std::move(value), false); }
  Var<T> variable(Array<T> value) { return leaf(std::move(value), true); }

  Var<T> push(Array<T> value, bool requires_grad, Backward backward)
  {
    nodes_.push_back(Node{std::move(value), Array<T>{}, requires_grad, std::move(backward)});
    return Var<T>{this, nodes_.size() - 1};
  }

  const Array<T> & value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Adjoint of a node after backward(); zeros when the node was not reached.
  Array<T> grad(Var<T> v) const
  {
    const Node & n = nodes_.at(v.id);
    if (n.grad.empty() && !n.value.empty()) {
      return Array<T>(n.value.shape());
    }
    return n.grad;
  }
  bool has_grad(Var<T> v) const { return !nodes_.at(v.id).grad.empty(); }

  /// Mutable adjoint slot, allocated (zeroed) on first use during backward.
  Array<T> & grad_slot(std::size_t id)
  {
    Node & n = nodes_[id];
    if (n.grad.empty()) {
      n.grad = Array<T>(n.value.shape());
    }
    return n.grad;
  }
  const Array<T> & upstream(std::size_t id) const { return nodes_[id].grad; }

  void backward(Var<T> loss)
  {
    if (loss.tape != this) {
      throw ContractError("loss belongs to another tape");
    }
    if (nodes_.at(loss.id).value.size() != 1) {
      throw ContractError(
        "backward seed must be a scalar, got shape " + shape_str(nodes_[loss.id].value.shape()));
    }
    for (auto & n : nodes_) {
      n.grad = Array<T>{};
    }
    grad_slot(loss.id)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node & n = nodes_[i];
      if (!n.requires_grad || !n.backward || n.grad.empty()) {
        continue;
      }
      n.backward(*this, i);
    }
  }

private:
  struct Node
  {
    Array<T> value;
    Array<T> grad;
    bool requires_grad;
    Backward backward;
  };

  std::deque<Node> nodes_;  // deque: references returned by value() survive later pushes
};

namespace detail
{

template <class T>
void check_same_tape(Var<T> a, Var<T> b)
{
  if (a.tape != b.tape) {
    throw ContractError("operands recorded on different tapes");
  }
}

// c[m x n] += a[m x k] * b[k x n]
template <class T>
void gemm_nn(
  const T * a, const T * b, T * c, std::size_t m, std::size_t k, std::size_t n)
{
  for (std::size_t i = 0; i < m; ++i) {
    T * ci = c + i * n;
    const T * ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T * bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        ci[j] += av * bp[j];
      }
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
template <class T>
void gemm_nt(
  const T * g, const T * b, T * c, std::size_t m, std::size_t n, std::size_t k)
{
  for (std::size_t i = 0; i < m; ++i) {
    const T * gi = g + i * n;
    T * ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T * bp = b + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) {
        acc += gi[j] * bp[j];
      }
      ci[p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
template <class T>
void gemm_tn(
  const T * a, const T * g, T * c, std::size_t m, std::size_t k, std::size_t n)
{
  for (std::size_t i = 0; i < m; ++i) {
    const T * ai = a + i * k;
    const T * gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      T * cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        cp[j] += av * gi[j];
      }
    }
  }
}

template <class T>
Array<T> zeros_like(const Array<T> & a)
{
  return Array<T>(a.shape());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <class T>
Var<T> matmul(Var<T> a, Var<T> b)
{
  detail::check_same_tape(a, b);
  const Array<T> & av = a.value();
  const Array<T> & bv = b.value();
  const std::size_t m = av.rows();
  const std::size_t k = av.cols();
  if (bv.rank() > 2 || bv.rows() != k) {
    throw DimensionError(
      "matmul inner extents differ: " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  const std::size_t n = bv.cols();
  Array<T> out({m, n});
  detail::gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.push(std::move(out), rg, [ia = a.id, ib = b.id, m, k, n](Tape<T> & tp, std::size_t self) {
    const T * g = tp.upstream(self).data().data();
    if (tp.requires_grad(ia)) {
      detail::gemm_nt(g, tp.value(ib).data().data(), tp.grad_slot(ia).data().data(), m, n, k);
    }
    if (tp.requires_grad(ib)) {
      detail::gemm_tn(tp.value(ia).data().data(), g, tp.grad_slot(ib).data().data(), m, k, n);
    }
  });
}

template <class T>
Var<T> transpose(Var<T> a)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Array<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[j * m + i] = av[i * n + j];
    }
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[j * m + i];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <class T>
Var<T> add(Var<T> a, Var<T> b)
{
  detail::check_same_tape(a, b);
  const Array<T> & av = a.value();
  const Array<T> & bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("add: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[i];
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.push(std::move(out), rg, [ia = a.id, ib = b.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    for (const std::size_t id : {ia, ib}) {
      if (tp.requires_grad(id)) {
        Array<T> & gi = tp.grad_slot(id);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gi[i] += g[i];
        }
      }
    }
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b)
{
  detail::check_same_tape(a, b);
  const Array<T> & av = a.value();
  const Array<T> & bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("sub: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] -= bv[i];
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.push(std::move(out), rg, [ia = a.id, ib = b.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    if (tp.requires_grad(ia)) {
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
      }
    }
    if (tp.requires_grad(ib)) {
      Array<T> & gb = tp.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] -= g[i];
      }
    }
  });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b)
{
  detail::check_same_tape(a, b);
  const Array<T> & av = a.value();
  const Array<T> & bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("mul: " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= bv[i];
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.push(std::move(out), rg, [ia = a.id, ib = b.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    if (tp.requires_grad(ia)) {
      const Array<T> & bv = tp.value(ib);
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv[i];
      }
    }
    if (tp.requires_grad(ib)) {
      const Array<T> & av = tp.value(ia);
      Array<T> & gb = tp.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] += g[i] * av[i];
      }
    }
  });
}

template <class T>
Var<T> scale(Var<T> a, T c)
{
  Array<T> out = a.value();
  for (auto & v : out.data()) {
    v *= c;
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, c](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += c * g[i];
    }
  });
}

/// a[m x n] + bias[n], bias broadcast over rows.
template <class T>
Var<T> add_row(Var<T> a, Var<T> bias)
{
  detail::check_same_tape(a, bias);
  const Array<T> & av = a.value();
  const Array<T> & bv = bias.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (bv.size() != n) {
    throw DimensionError(
      "add_row: bias " + shape_str(bv.shape()) + " vs columns of " + shape_str(av.shape()));
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] += bv[j];
    }
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(bias.id);
  return t.push(std::move(out), rg, [ia = a.id, ib = bias.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    if (tp.requires_grad(ia)) {
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
      }
    }
    if (tp.requires_grad(ib)) {
      Array<T> & gb = tp.grad_slot(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          gb[j] += g[i * n + j];
        }
      }
    }
  });
}

/// a - s, where s holds a single value broadcast over a.
template <class T>
Var<T> sub_scalar(Var<T> a, Var<T> s)
{
  detail::check_same_tape(a, s);
  if (s.size() != 1) {
    throw DimensionError("sub_scalar: operand must hold one value");
  }
  Array<T> out = a.value();
  const T sv = s.value()[0];
  for (auto & v : out.data()) {
    v -= sv;
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(s.id);
  return t.push(std::move(out), rg, [ia = a.id, is = s.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    if (tp.requires_grad(ia)) {
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
      }
    }
    if (tp.requires_grad(is)) {
      T acc{0};
      for (std::size_t i = 0; i < g.size(); ++i) {
        acc += g[i];
      }
      tp.grad_slot(is)[0] -= acc;
    }
  });
}

template <class T>
Var<T> relu(Var<T> a)
{
  Array<T> out = a.value();
  for (auto & v : out.data()) {
    v = v > T{0} ? v : T{0};
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & y = tp.value(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > T{0}) {
        ga[i] += g[i];
      }
    }
  });
}

template <class T>
Var<T> tanh(Var<T> a)
{
  Array<T> out = a.value();
  for (auto & v : out.data()) {
    v = std::tanh(v);
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & y = tp.value(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * (T{1} - y[i] * y[i]);
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Row-wise softmax with per-row max subtraction.
template <class T>
Var<T> softmax_rows(Var<T> a)
{
  Array<T> out = a.value();
  const std::size_t m = out.rows();
  const std::size_t n = out.cols();
  for (std::size_t i = 0; i < m; ++i) {
    T * r = out.data().data() + i * n;
    const T mx = *std::max_element(r, r + n);
    T total{0};
    for (std::size_t j = 0; j < n; ++j) {
      r[j] = std::exp(r[j] - mx);
      total += r[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      r[j] /= total;
    }
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & y = tp.value(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) {
        dot += g[i * n + j] * y[i * n + j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
      }
    }
  });
}

/// Per-row layer normalization (biased variance) followed by gain and bias.
template <class T>
Var<T> layer_norm(Var<T> a, Var<T> gain, Var<T> bias, double eps = 1e-5)
{
  detail::check_same_tape(a, gain);
  detail::check_same_tape(a, bias);
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t d = av.cols();
  if (d == 0) {
    throw DimensionError("layer_norm over an empty feature axis");
  }
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm: gain/bias width differs from feature width");
  }
  const Array<T> & gv = gain.value();
  const Array<T> & bv = bias.value();
  Array<T> out(av.shape());
  // normalized values and inverse std are kept for the adjoint
  Array<T> xhat(av.shape());
  std::vector<T> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T * x = av.data().data() + i * d;
    T mean{0};
    for (std::size_t j = 0; j < d; ++j) {
      mean += x[j];
    }
    mean /= static_cast<T>(d);
    T var{0};
    for (std::size_t j = 0; j < d; ++j) {
      var += (x[j] - mean) * (x[j] - mean);
    }
    var /= static_cast<T>(d);
    const T is = T{1} / std::sqrt(var + static_cast<T>(eps));
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (x[j] - mean) * is;
      out[i * d + j] = xhat[i * d + j] * gv[j] + bv[j];
    }
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(gain.id) || t.requires_grad(bias.id);
  return t.push(
    std::move(out), rg,
    [ia = a.id, ig = gain.id, ib = bias.id, m, d, xhat = std::move(xhat),
     inv_std = std::move(inv_std)](Tape<T> & tp, std::size_t self) {
      const Array<T> & g = tp.upstream(self);
      const Array<T> & gv = tp.value(ig);
      if (tp.requires_grad(ig)) {
        Array<T> & gg = tp.grad_slot(ig);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            gg[j] += g[i * d + j] * xhat[i * d + j];
          }
        }
      }
      if (tp.requires_grad(ib)) {
        Array<T> & gb = tp.grad_slot(ib);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            gb[j] += g[i * d + j];
          }
        }
      }
      if (tp.requires_grad(ia)) {
        Array<T> & ga = tp.grad_slot(ia);
        const T inv_d = T{1} / static_cast<T>(d);
        for (std::size_t i = 0; i < m; ++i) {
          T sum_g{0};
          T sum_gx{0};
          for (std::size_t j = 0; j < d; ++j) {
            const T gh = g[i * d + j] * gv[j];
            sum_g += gh;
            sum_gx += gh * xhat[i * d + j];
          }
          for (std::size_t j = 0; j < d; ++j) {
            const T gh = g[i * d + j] * gv[j];
            ga[i * d + j] +=
              inv_std[i] * (gh - inv_d * sum_g - xhat[i * d + j] * inv_d * sum_gx);
          }
        }
      }
    });
}

/// Rows scaled to unit L2 norm; norms are clamped below at eps.
template <class T>
Var<T> normalize_rows(Var<T> a, double eps = 1e-8)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Array<T> out(av.shape());
  std::vector<T> norms(m);
  std::vector<bool> clamped(m);
  for (std::size_t i = 0; i < m; ++i) {
    T ss{0};
    for (std::size_t j = 0; j < n; ++j) {
      ss += av[i * n + j] * av[i * n + j];
    }
    T nr = std::sqrt(ss);
    clamped[i] = nr < static_cast<T>(eps);
    if (clamped[i]) {
      nr = static_cast<T>(eps);
    }
    norms[i] = nr;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = av[i * n + j] / nr;
    }
  }
  Tape<T> & t = *a.tape;
  return t.push(
    std::move(out), t.requires_grad(a.id),
    [ia = a.id, m, n, norms = std::move(norms), clamped = std::move(clamped)](
      Tape<T> & tp, std::size_t self) {
      const Array<T> & g = tp.upstream(self);
      const Array<T> & y = tp.value(self);
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < m; ++i) {
        T dot{0};
        if (!clamped[i]) {
          for (std::size_t j = 0; j < n; ++j) {
            dot += g[i * n + j] * y[i * n + j];
          }
        }
        for (std::size_t j = 0; j < n; ++j) {
          ga[i * n + j] += (g[i * n + j] - y[i * n + j] * dot) / norms[i];
        }
      }
    });
}

// ---------------------------------------------------------------------------
// Structural
// ---------------------------------------------------------------------------

template <class T>
Var<T> reshape(Var<T> a, Shape shape)
{
  Array<T> out = a.value().reshaped(std::move(shape));
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
    }
  });
}

/// Column-wise concatenation of matrices sharing a row count.
template <class T>
Var<T> concat_cols(const std::vector<Var<T>> & parts)
{
  if (parts.empty()) {
    throw DimensionError("concat_cols of nothing");
  }
  const std::size_t m = parts.front().rows();
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  bool rg = false;
  Tape<T> & t = *parts.front().tape;
  for (const auto & p : parts) {
    detail::check_same_tape(parts.front(), p);
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row counts differ");
    }
    widths.push_back(p.cols());
    ids.push_back(p.id);
    total += p.cols();
    rg = rg || t.requires_grad(p.id);
  }
  Array<T> out({m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array<T> & pv = parts[k].value();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(pv.data().data() + i * widths[k], widths[k], out.data().data() + i * total + off);
    }
    off += widths[k];
  }
  return t.push(
    std::move(out), rg,
    [ids = std::move(ids), widths = std::move(widths), m, total](Tape<T> & tp, std::size_t self) {
      const Array<T> & g = tp.upstream(self);
      std::size_t off = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (tp.requires_grad(ids[k])) {
          Array<T> & gk = tp.grad_slot(ids[k]);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < widths[k]; ++j) {
              gk[i * widths[k] + j] += g[i * total + off + j];
            }
          }
        }
        off += widths[k];
      }
    });
}

/// Columns [c0, c1) of a matrix.
template <class T>
Var<T> slice_cols(Var<T> a, std::size_t c0, std::size_t c1)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (c0 > c1 || c1 > n) {
    throw DimensionError("slice_cols out of range");
  }
  const std::size_t w = c1 - c0;
  Array<T> out({m, w});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(av.data().data() + i * n + c0, w, out.data().data() + i * w);
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n, c0, w](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        ga[i * n + c0 + j] += g[i * w + j];
      }
    }
  });
}

/// out row r = a row index[r]; adjoint scatter-adds.
template <class T>
Var<T> gather_rows(Var<T> a, std::vector<std::size_t> index)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Array<T> out({index.size(), n});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= m) {
      throw DimensionError("gather_rows index out of range");
    }
    std::copy_n(av.data().data() + index[r] * n, n, out.data().data() + r * n);
  }
  Tape<T> & t = *a.tape;
  return t.push(
    std::move(out), t.requires_grad(a.id),
    [ia = a.id, n, index = std::move(index)](Tape<T> & tp, std::size_t self) {
      const Array<T> & g = tp.upstream(self);
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t r = 0; r < index.size(); ++r) {
        for (std::size_t j = 0; j < n; ++j) {
          ga[index[r] * n + j] += g[r * n + j];
        }
      }
    });
}

/// Sums consecutive blocks of `group` rows: [m x n] -> [m/group x n].
template <class T>
Var<T> segment_sum_rows(Var<T> a, std::size_t group)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (group == 0 || m % group != 0) {
    throw DimensionError("segment_sum_rows: row count not divisible by group");
  }
  const std::size_t out_rows = m / group;
  Array<T> out({out_rows, n});
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t o = r / group;
    for (std::size_t j = 0; j < n; ++j) {
      out[o * n + j] += av[r * n + j];
    }
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n, group](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t o = r / group;
      for (std::size_t j = 0; j < n; ++j) {
        ga[r * n + j] += g[o * n + j];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions and broadcasts
// ---------------------------------------------------------------------------

/// Row sums: [m x n] -> [m x 1].
template <class T>
Var<T> row_sum(Var<T> a)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Array<T> out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < n; ++j) {
      acc += av[i * n + j];
    }
    out[i] = acc;
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i];
      }
    }
  });
}

/// a[m x n] with row i multiplied by s[i].
template <class T>
Var<T> mul_col(Var<T> a, Var<T> s)
{
  detail::check_same_tape(a, s);
  const Array<T> & av = a.value();
  const Array<T> & sv = s.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (sv.size() != m) {
    throw DimensionError("mul_col: scale length differs from row count");
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] *= sv[i];
    }
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(s.id);
  return t.push(std::move(out), rg, [ia = a.id, is = s.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & av = tp.value(ia);
    const Array<T> & sv = tp.value(is);
    if (tp.requires_grad(ia)) {
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          ga[i * n + j] += g[i * n + j] * sv[i];
        }
      }
    }
    if (tp.requires_grad(is)) {
      Array<T> & gs = tp.grad_slot(is);
      for (std::size_t i = 0; i < m; ++i) {
        T acc{0};
        for (std::size_t j = 0; j < n; ++j) {
          acc += g[i * n + j] * av[i * n + j];
        }
        gs[i] += acc;
      }
    }
  });
}

/// a[m x n] with row i divided by s[i].
template <class T>
Var<T> div_col(Var<T> a, Var<T> s)
{
  detail::check_same_tape(a, s);
  const Array<T> & av = a.value();
  const Array<T> & sv = s.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (sv.size() != m) {
    throw DimensionError("div_col: divisor length differs from row count");
  }
  Array<T> out = av;
  for (std::size_t i = 0; i < m; ++i) {
    if (sv[i] == T{0}) {
      throw InvariantError("div_col: zero divisor in row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] /= sv[i];
    }
  }
  Tape<T> & t = *a.tape;
  const bool rg = t.requires_grad(a.id) || t.requires_grad(s.id);
  return t.push(std::move(out), rg, [ia = a.id, is = s.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & y = tp.value(self);
    const Array<T> & sv = tp.value(is);
    if (tp.requires_grad(ia)) {
      Array<T> & ga = tp.grad_slot(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          ga[i * n + j] += g[i * n + j] / sv[i];
        }
      }
    }
    if (tp.requires_grad(is)) {
      Array<T> & gs = tp.grad_slot(is);
      for (std::size_t i = 0; i < m; ++i) {
        T acc{0};
        for (std::size_t j = 0; j < n; ++j) {
          acc += g[i * n + j] * y[i * n + j];
        }
        gs[i] -= acc / sv[i];
      }
    }
  });
}

/// Euclidean norm of each row: [m x n] -> [m x 1]. Adjoint is zero at the origin.
template <class T>
Var<T> row_l2_norm(Var<T> a)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  Array<T> out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    T ss{0};
    for (std::size_t j = 0; j < n; ++j) {
      ss += av[i * n + j] * av[i * n + j];
    }
    out[i] = std::sqrt(ss);
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, m, n](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    const Array<T> & y = tp.value(self);
    const Array<T> & av = tp.value(ia);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < m; ++i) {
      if (y[i] == T{0}) {
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i] * av[i * n + j] / y[i];
      }
    }
  });
}

/// Row minima [m x n] -> [m x 1]; the adjoint reaches only the first argmin.
template <class T>
Var<T> row_min(Var<T> a)
{
  const Array<T> & av = a.value();
  const std::size_t m = av.rows();
  const std::size_t n = av.cols();
  if (n == 0) {
    throw DimensionError("row_min over zero columns");
  }
  Array<T> out({m, 1});
  std::vector<std::size_t> arg(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (av[i * n + j] < av[i * n + best]) {
        best = j;
      }
    }
    arg[i] = best;
    out[i] = av[i * n + best];
  }
  Tape<T> & t = *a.tape;
  return t.push(std::move(out), t.requires_grad(a.id), [ia = a.id, n, arg = std::move(arg)](Tape<T> & tp, std::size_t self) {
    const Array<T> & g = tp.upstream(self);
    Array<T> & ga = tp.grad_slot(ia);
    for (std::size_t i = 0; i < arg.size(); ++i) {
      ga[i * n + arg[i]] += g[i];
    }
  });
}

template <class T>
Var<T> sum_all(Var<T> a)
{
  T acc{0};
  for (const T v : a.value().data()) {
    acc += v;
  }
  Tape<T> & t = *a.tape;
  return t.push(Array<T>::scalar(acc), t.requires_grad(a.id), [ia = a.id](Tape<T> & tp, std::size_t self) {
    const T g = tp.upstream(self)[0];
    for (auto & v : tp.grad_slot(ia).data()) {
      v += g;
    }
  });
}

template <class T>
Var<T> mean_all(Var<T> a)
{
  const std::size_t n = a.size();
  if (n == 0) {
    throw DimensionError("mean of an empty array");
  }
  return scale(sum_all(a), T{1} / static_cast<T>(n));
}

// ---------------------------------------------------------------------------
// Custom gradient region
// ---------------------------------------------------------------------------

/**
 * @brief Region whose forward output is `forward(x)` and whose adjoint is
 * `backward(x, y, dy)` instead of the true derivative of `forward`.
 */
template <class T>
struct CustomGradRegion
{
  std::function<Array<T>(const Array<T> &)> forward;
  std::function<Array<T>(const Array<T> & x, const Array<T> & y, const Array<T> & dy)> backward;

  Var<T> operator()(Var<T> x) const
  {
    Array<T> y = forward(x.value());
    Tape<T> & t = *x.tape;
    return t.push(std::move(y), t.requires_grad(x.id), [ix = x.id, bw = backward](Tape<T> & tp, std::size_t self) {
      const Array<T> gx = bw(tp.value(ix), tp.value(self), tp.upstream(self));
      Array<T> & slot = tp.grad_slot(ix);
      if (gx.size() != slot.size()) {
        throw DimensionError("custom backward returned a mis-shaped adjoint");
      }
      for (std::size_t i = 0; i < gx.size(); ++i) {
        slot[i] += gx[i];
      }
    });
  }
};

template <class T>
void backprop(Tape<T> & tape, Var<T> loss)
{
  tape.backward(loss);
}

}  // namespace mart

#endif  // MART__TAPE_HPP_
