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

#ifndef MART__LAYERS_HPP_
#define MART__LAYERS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "mart/params.hpp"
#include "mart/tape.hpp"

namespace mart
{

/// x * W + b. Stores parameter indices only, so a layout is precision-agnostic.
struct Linear
{
  static constexpr std::size_t kNoBias = static_cast<std::size_t>(-1);

  std::size_t weight{0};
  std::size_t bias{kNoBias};
  std::size_t in{0};
  std::size_t out{0};

  template <class T>
  static Linear create(
    ParameterStore<T> & store, const std::string & name, std::size_t in, std::size_t out,
    bool with_bias = true)
  {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = store.add(name + ".weight", {in, out}, Init::glorot);
    if (with_bias) {
      l.bias = store.add(name + ".bias", {out}, Init::zeros);
    }
    return l;
  }

  bool has_bias() const noexcept { return bias != kNoBias; }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> x) const
  {
    Var<T> y = matmul(x, s.param(weight));
    return has_bias() ? add_row(y, s.param(bias)) : y;
  }

  std::size_t param_count() const { return in * out + (has_bias() ? out : 0); }
};

struct Norm
{
  std::size_t gain{0};
  std::size_t bias{0};

  template <class T>
  static Norm create(ParameterStore<T> & store, const std::string & name, std::size_t width)
  {
    Norm n;
    n.gain = store.add(name + ".gain", {width}, Init::ones);
    n.bias = store.add(name + ".bias", {width}, Init::zeros);
    return n;
  }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> x) const
  {
    return layer_norm(x, s.param(gain), s.param(bias), 1e-5);
  }
};

/// Stack of linear layers with ReLU between consecutive layers (none after the last).
struct Mlp
{
  std::vector<Linear> layers;

  template <class T>
  static Mlp create(ParameterStore<T> & store, const std::string & name, const std::vector<std::size_t> & widths)
  {
    Mlp m;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      m.layers.push_back(Linear::create(store, name + "." + std::to_string(i), widths[i], widths[i + 1]));
    }
    return m;
  }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> x) const
  {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](s, x);
      if (i + 1 < layers.size()) {
        x = relu(x);
      }
    }
    return x;
  }
};

/**
 * @brief [Add & Norm]-[FeedForward]-[Add & Norm] block.
 *
 *   u = LN(x W + residual), z = FFN(u), out = LN(z + u)
 *
 * Serves as the node update (W maps attention output) and as the edge and
 * hyperedge updates (W maps messages).
 */
struct TransformerUpdate
{
  Linear project;
  Norm norm1;
  Mlp ffn;
  Norm norm2;

  template <class T>
  static TransformerUpdate create(
    ParameterStore<T> & store, const std::string & name, std::size_t in, std::size_t width,
    std::size_t hidden)
  {
    TransformerUpdate u;
    u.project = Linear::create(store, name + ".project", in, width);
    u.norm1 = Norm::create(store, name + ".norm1", width);
    u.ffn = Mlp::create(store, name + ".ffn", {width, hidden, width});
    u.norm2 = Norm::create(store, name + ".norm2", width);
    return u;
  }

  template <class T>
  Var<T> operator()(Session<T> & s, Var<T> x, Var<T> residual) const
  {
    Var<T> u = norm1(s, add(project(s, x), residual));
    Var<T> z = ffn(s, u);
    return norm2(s, add(z, u));
  }
};

}  // namespace mart

#endif  // MART__LAYERS_HPP_
