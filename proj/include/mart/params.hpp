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

#ifndef MART__PARAMS_HPP_
#define MART__PARAMS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mart/array.hpp"
#include "mart/errors.hpp"
#include "mart/tape.hpp"

namespace mart
{

/// How a parameter is filled by ParameterStore::initialize().
enum class Init
{
  glorot,  // uniform in +-sqrt(6 / (fan_in + fan_out))
  zeros,
  ones,
  constant,
};

struct ParamSpec
{
  std::string name;
  Shape shape;
  Init init{Init::zeros};
  double value{0.0};  // used by Init::constant
};

/// Named, shaped learnable arrays kept in registration order.
template <class T>
class ParameterStore
{
public:
  std::size_t add(std::string name, Shape shape, Init init, double value = 0.0)
  {
    if (index_.count(name)) {
      throw ConfigError("duplicate parameter name " + name);
    }
    index_.emplace(name, specs_.size());
    specs_.push_back(ParamSpec{std::move(name), shape, init, value});
    values_.emplace_back(std::move(shape));
    return specs_.size() - 1;
  }

  std::size_t count() const noexcept { return specs_.size(); }
  const ParamSpec & spec(std::size_t i) const { return specs_.at(i); }
  const std::vector<ParamSpec> & specs() const noexcept { return specs_; }
  const std::string & name(std::size_t i) const { return specs_.at(i).name; }

  Array<T> & value(std::size_t i) { return values_.at(i); }
  const Array<T> & value(std::size_t i) const { return values_.at(i); }
  Array<T> & value(const std::string & name) { return values_.at(find(name)); }
  const Array<T> & value(const std::string & name) const { return values_.at(find(name)); }

  std::size_t find(const std::string & name) const
  {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ConfigError("unknown parameter " + name);
    }
    return it->second;
  }
  bool contains(const std::string & name) const { return index_.count(name) != 0; }

  std::size_t total_size() const
  {
    std::size_t n = 0;
    for (const auto & v : values_) {
      n += v.size();
    }
    return n;
  }

  /// Deterministic fill from `seed`; draws happen in registration order.
  void initialize(std::uint64_t seed)
  {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const ParamSpec & s = specs_[i];
      Array<T> & v = values_[i];
      switch (s.init) {
        case Init::zeros:
          v.fill(T{0});
          break;
        case Init::ones:
          v.fill(T{1});
          break;
        case Init::constant:
          v.fill(static_cast<T>(s.value));
          break;
        case Init::glorot: {
          const double fan_in = s.shape.size() >= 2 ? static_cast<double>(s.shape[0]) : 1.0;
          const double fan_out = static_cast<double>(s.shape.back());
          const double limit = std::sqrt(6.0 / (fan_in + fan_out));
          std::uniform_real_distribution<double> dist(-limit, limit);
          for (auto & x : v.data()) {
            x = static_cast<T>(dist(rng));
          }
          break;
        }
      }
    }
  }

  template <class U>
  ParameterStore<U> cast() const
  {
    ParameterStore<U> out;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      out.add(specs_[i].name, specs_[i].shape, specs_[i].init, specs_[i].value);
      out.value(i) = values_[i].template cast<U>();
    }
    return out;
  }

  /// Flattened copy of every value in registration order.
  std::vector<T> flatten() const
  {
    std::vector<T> out;
    out.reserve(total_size());
    for (const auto & v : values_) {
      out.insert(out.end(), v.data().begin(), v.data().end());
    }
    return out;
  }

  void unflatten(const std::vector<T> & flat)
  {
    if (flat.size() != total_size()) {
      throw DimensionError("flat parameter vector has the wrong length");
    }
    std::size_t off = 0;
    for (auto & v : values_) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v.size(), v.data().begin());
      off += v.size();
    }
  }

private:
  std::vector<ParamSpec> specs_;
  std::vector<Array<T>> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// One gradient array per parameter, aligned with a ParameterStore.
template <class T>
using Gradients = std::vector<Array<T>>;

template <class T>
Gradients<T> zero_gradients(const ParameterStore<T> & store)
{
  Gradients<T> g;
  g.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    g.emplace_back(store.value(i).shape());
  }
  return g;
}

/**
 * @brief Binds parameters of a store onto a tape on first use.
 *
 * Parameters never touched during the forward pass are never bound and so
 * receive exact zero gradients.
 */
template <class T>
class Session
{
public:
  Session(Tape<T> & tape, const ParameterStore<T> & store)
  : tape_(tape), store_(store), bound_(store.count())
  {
  }

  Tape<T> & tape() noexcept { return tape_; }
  const ParameterStore<T> & store() const noexcept { return store_; }

  Var<T> param(std::size_t index)
  {
    auto & slot = bound_.at(index);
    if (!slot) {
      slot = tape_.variable(store_.value(index));
    }
    return *slot;
  }

  Var<T> constant(Array<T> value) { return tape_.constant(std::move(value)); }

  Gradients<T> gradients() const
  {
    Gradients<T> g;
    g.reserve(bound_.size());
    for (std::size_t i = 0; i < bound_.size(); ++i) {
      if (bound_[i]) {
        g.push_back(tape_.grad(*bound_[i]));
      } else {
        g.emplace_back(store_.value(i).shape());
      }
    }
    return g;
  }

private:
  Tape<T> & tape_;
  const ParameterStore<T> & store_;
  std::vector<std::optional<Var<T>>> bound_;
};

}  // namespace mart

#endif  // MART__PARAMS_HPP_
