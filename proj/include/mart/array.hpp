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

#ifndef MART__ARRAY_HPP_
#define MART__ARRAY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mart/errors.hpp"

namespace mart
{

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape & shape)
{
  return std::accumulate(
    shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>{});
}

inline std::string shape_str(const Shape & shape)
{
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  os << ']';
  return os.str();
}

/**
 * @brief Dense row-major array of real numbers.
 *
 * Most kernels treat an Array as a matrix: rank-1 arrays are a single row and
 * higher ranks fold every leading extent into the row count.
 */
template <class T>
class Array
{
public:
  using value_type = T;

  Array() = default;

  explicit Array(Shape shape, T fill = T{})
  : shape_(std::move(shape)), data_(shape_size(shape_), fill)
  {
  }

  Array(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
  {
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError(
        "data length " + std::to_string(data_.size()) + " does not match shape " +
        shape_str(shape_));
    }
  }

  static Array matrix(std::initializer_list<std::initializer_list<T>> rows)
  {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<T> data;
    data.reserve(m * n);
    for (const auto & r : rows) {
      if (r.size() != n) {
        throw DimensionError("ragged matrix literal");
      }
      data.insert(data.end(), r.begin(), r.end());
    }
    return Array({m, n}, std::move(data));
  }

  static Array vector(std::initializer_list<T> values)
  {
    return Array({values.size()}, std::vector<T>(values));
  }

  static Array scalar(T v) { return Array({1, 1}, std::vector<T>{v}); }

  const Shape & shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Row count when viewed as a matrix (all leading extents folded).
  std::size_t rows() const noexcept
  {
    if (shape_.empty()) {
      return 1;
    }
    if (shape_.size() == 1) {
      return 1;
    }
    return data_.size() / shape_.back();
  }
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T> & storage() noexcept { return data_; }
  const std::vector<T> & storage() const noexcept { return data_; }

  T & operator[](std::size_t i) noexcept { return data_[i]; }
  const T & operator[](std::size_t i) const noexcept { return data_[i]; }
  T & operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  const T & operator()(std::size_t r, std::size_t c) const noexcept
  {
    return data_[r * cols() + c];
  }

  Array reshaped(Shape shape) const
  {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Array(std::move(shape), data_);
  }

  template <class U>
  Array<U> cast() const
  {
    std::vector<U> out(data_.begin(), data_.end());
    return Array<U>(shape_, std::move(out));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Array & a, const Array & b)
  {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

private:
  Shape shape_;
  std::vector<T> data_;
};

template <class T>
bool all_finite(const Array<T> & a)
{
  for (const T v : a.data()) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

}  // namespace mart

#endif  // MART__ARRAY_HPP_
