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

#ifndef MART__FEATURES_HPP_
#define MART__FEATURES_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mart/errors.hpp"
#include "mart/layers.hpp"
#include "mart/params.hpp"
#include "mart/tape.hpp"

namespace mart
{

/// Sinusoidal encoding PE[t, 2i] = sin(t / 10000^(2i/d)), PE[t, 2i+1] = cos(...), t from 0.
template <class T = double>
Array<T> positional_encoding(std::size_t steps, std::size_t width)
{
  if (width % 2 != 0) {
    throw ConfigError("positional encoding width must be even, got " + std::to_string(width));
  }
  Array<T> pe({steps, width});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(width));
      const double angle = static_cast<double>(t) / freq;
      pe[t * width + 2 * i] = static_cast<T>(std::sin(angle));
      pe[t * width + 2 * i + 1] = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

/// Row indices (i, j) -> i and (i, j) -> j over the N*N ordered pairs, row r = i*N + j.
inline std::vector<std::size_t> pair_destinations(std::size_t n)
{
  std::vector<std::size_t> idx(n * n);
  for (std::size_t r = 0; r < n * n; ++r) idx[r] = r / n;
  return idx;
}

inline std::vector<std::size_t> pair_sources(std::size_t n)
{
  std::vector<std::size_t> idx(n * n);
  for (std::size_t r = 0; r < n * n; ++r) idx[r] = r % n;
  return idx;
}

/// Row (i, j) -> row (j, i).
inline std::vector<std::size_t> pair_reversed(std::size_t n)
{
  std::vector<std::size_t> idx(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) idx[i * n + j] = j * n + i;
  }
  return idx;
}

/// Row j: mean of x_i over members i of hyperedge j (G_ij = 1).
template <class T>
Var<T> hyperedge_member_mean(Var<T> incidence, Var<T> x)
{
  Var<T> gt = transpose(incidence);
  Var<T> count = row_sum(gt);
  for (std::size_t j = 0; j < count.size(); ++j) {
    if (count.value()[j] <= T{0}) {
      throw InvariantError("hyperedge " + std::to_string(j) + " has no members");
    }
  }
  return div_col(matmul(gt, x), count);
}

/// Row i: mean of y_k over hyperedges k that agent i belongs to (G_ik = 1).
template <class T>
Var<T> membership_mean(Var<T> incidence, Var<T> y)
{
  Var<T> count = row_sum(incidence);
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count.value()[i] <= T{0}) {
      throw InvariantError("agent " + std::to_string(i) + " belongs to no hyperedge");
    }
  }
  return div_col(matmul(incidence, y), count);
}

/**
 * @brief Node initializer: n = Flatten(PosEnc(X W1)) W2.
 *
 * Two linear maps with the positional encoding added between them and no
 * activation.
 */
struct NodeInitializer
{
  Linear embed;    // d_in -> d_n, applied per time step
  Linear project;  // T_p * d_n -> d_n
  std::size_t steps{0};
  std::size_t width{0};

  template <class T>
  static NodeInitializer create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_in, std::size_t t_p,
    std::size_t d_n)
  {
    NodeInitializer ni;
    ni.steps = t_p;
    ni.width = d_n;
    ni.embed = Linear::create(store, name + ".embed", d_in, d_n);
    ni.project = Linear::create(store, name + ".project", t_p * d_n, d_n);
    return ni;
  }

  /// inputs: N x T x d_in -> N x d_n.
  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> inputs) const
  {
    const Shape & shp = inputs.shape();
    if (shp.size() != 3) {
      throw DimensionError("node initializer expects N x T_p x d_in inputs");
    }
    const std::size_t n = shp[0];
    const std::size_t t = shp[1];
    Var<T> x = reshape(inputs, {n * t, shp[2]});
    x = embed(s, x);
    const Array<T> pe = positional_encoding<T>(t, width);
    Array<T> tiled({n * t, width});
    for (std::size_t a = 0; a < n; ++a) {
      std::copy(pe.data().begin(), pe.data().end(),
                tiled.data().begin() + static_cast<std::ptrdiff_t>(a * t * width));
    }
    x = add(x, s.constant(std::move(tiled)));
    x = reshape(x, {n, t * width});
    return project(s, x);
  }
};

/// e_ij = MLP([n_i; n_j]), i destination, j source. Output N*N x d_e.
struct PairEdgeInitializer
{
  Mlp mlp;

  template <class T>
  static PairEdgeInitializer create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_n, std::size_t d_h,
    std::size_t d_e)
  {
    return PairEdgeInitializer{Mlp::create(store, name, {2 * d_n, d_h, d_e})};
  }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> nodes) const
  {
    const std::size_t n = nodes.rows();
    Var<T> x = concat_cols<T>({gather_rows(nodes, pair_destinations(n)), gather_rows(nodes, pair_sources(n))});
    return mlp(s, x);
  }
};

/// h_j = MLP(mean of member nodes of hyperedge j). Output N x d_e.
struct HyperedgeInitializer
{
  Mlp mlp;

  template <class T>
  static HyperedgeInitializer create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_n, std::size_t d_h,
    std::size_t d_e)
  {
    return HyperedgeInitializer{Mlp::create(store, name, {d_n, d_h, d_e})};
  }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> nodes, Var<T> incidence) const
  {
    return mlp(s, hyperedge_member_mean(incidence, nodes));
  }
};

}  // namespace mart

#endif  // MART__FEATURES_HPP_
