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

#ifndef MART__ATTENTION_HPP_
#define MART__ATTENTION_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "mart/config.hpp"
#include "mart/errors.hpp"
#include "mart/tape.hpp"

namespace mart
{

template <class T>
struct AttentionResult
{
  Var<T> context;               // N x d
  std::vector<Var<T>> weights;  // per head, N x N, rows sum to 1
};

inline double attention_logit_scale(std::size_t width, std::size_t heads, AttentionScale mode)
{
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width must be divisible by the head count");
  }
  const std::size_t denom = mode == AttentionScale::head ? width / heads : width;
  return 1.0 / std::sqrt(static_cast<double>(denom));
}

/**
 * @brief Multi-head attention with pair-specific queries, keys and values.
 *
 * q, k, v are N*N x d with row i*N + j holding q_ij, k_ij, v_ij. Per head:
 * a_ij = softmax_j(q_ij . k_ij * scale), context_i = sum_j a_ij v_ij.
 */
template <class T>
AttentionResult<T> pair_attention(
  Var<T> q, Var<T> k, Var<T> v, std::size_t n, std::size_t heads, double logit_scale)
{
  const std::size_t d = q.cols();
  if (q.rows() != n * n || k.rows() != n * n || v.rows() != n * n) {
    throw DimensionError("pair attention expects N*N rows");
  }
  const std::size_t dh = d / heads;
  AttentionResult<T> r;
  std::vector<Var<T>> ctx;
  for (std::size_t h = 0; h < heads; ++h) {
    Var<T> qh = slice_cols(q, h * dh, (h + 1) * dh);
    Var<T> kh = slice_cols(k, h * dh, (h + 1) * dh);
    Var<T> vh = slice_cols(v, h * dh, (h + 1) * dh);
    Var<T> logits = scale(row_sum(mul(qh, kh)), static_cast<T>(logit_scale));
    Var<T> w = softmax_rows(reshape(logits, {n, n}));
    r.weights.push_back(w);
    ctx.push_back(segment_sum_rows(mul_col(vh, reshape(w, {n * n, 1})), n));
  }
  r.context = heads == 1 ? ctx.front() : concat_cols(ctx);
  return r;
}

/// Standard multi-head scaled dot-product attention over N tokens.
template <class T>
AttentionResult<T> token_attention(Var<T> q, Var<T> k, Var<T> v, std::size_t heads, double logit_scale)
{
  const std::size_t d = q.cols();
  const std::size_t dh = d / heads;
  AttentionResult<T> r;
  std::vector<Var<T>> ctx;
  for (std::size_t h = 0; h < heads; ++h) {
    Var<T> qh = slice_cols(q, h * dh, (h + 1) * dh);
    Var<T> kh = slice_cols(k, h * dh, (h + 1) * dh);
    Var<T> vh = slice_cols(v, h * dh, (h + 1) * dh);
    Var<T> w = softmax_rows(scale(matmul(qh, transpose(kh)), static_cast<T>(logit_scale)));
    r.weights.push_back(w);
    ctx.push_back(matmul(w, vh));
  }
  r.context = heads == 1 ? ctx.front() : concat_cols(ctx);
  return r;
}

}  // namespace mart

#endif  // MART__ATTENTION_HPP_
