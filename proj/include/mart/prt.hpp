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

#ifndef MART__PRT_HPP_
#define MART__PRT_HPP_

#include <cstddef>
#include <string>
#include <utility>

#include "mart/attention.hpp"
#include "mart/config.hpp"
#include "mart/features.hpp"
#include "mart/layers.hpp"

namespace mart
{

template <class T>
struct PairQkv
{
  Var<T> q;  // N*N x d_n
  Var<T> k;
  Var<T> v;
};

template <class T>
struct PrtState
{
  Var<T> nodes;  // N x d_n
  Var<T> edges;  // N*N x d_e
};

/**
 * @brief Pair-wise relational transformer layer.
 *
 * Node update uses relational attention (queries, keys and values each add a
 * projected pair edge); the edge update then consumes the updated nodes.
 */
struct PrtLayer
{
  Linear node_q, node_k, node_v;  // d_n -> d_n
  Linear edge_q, edge_k, edge_v;  // d_e -> d_n
  TransformerUpdate node_update_fn;
  Linear message;  // 2 d_e + 2 d_n -> d_h
  TransformerUpdate edge_update_fn;
  std::size_t heads{1};
  std::size_t width{0};
  AttentionScale scale_mode{AttentionScale::head};

  template <class T>
  static PrtLayer create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_n, std::size_t d_e,
    std::size_t d_h, std::size_t heads, AttentionScale scale_mode)
  {
    if (d_n % heads != 0) throw ConfigError("d_n must be divisible by heads");
    PrtLayer l;
    l.heads = heads;
    l.width = d_n;
    l.scale_mode = scale_mode;
    l.node_q = Linear::create(store, name + ".node_q", d_n, d_n);
    // keys carry no bias: a shift shared by every key cancels in the softmax
    l.node_k = Linear::create(store, name + ".node_k", d_n, d_n, false);
    l.node_v = Linear::create(store, name + ".node_v", d_n, d_n);
    l.edge_q = Linear::create(store, name + ".edge_q", d_e, d_n);
    l.edge_k = Linear::create(store, name + ".edge_k", d_e, d_n, false);
    l.edge_v = Linear::create(store, name + ".edge_v", d_e, d_n);
    l.node_update_fn = TransformerUpdate::create(store, name + ".node_update", d_n, d_n, d_h);
    l.message = Linear::create(store, name + ".message", 2 * d_e + 2 * d_n, d_h);
    l.edge_update_fn = TransformerUpdate::create(store, name + ".edge_update", d_h, d_e, d_h);
    return l;
  }

  /// q_ij = n_i Wq + e_ij Weq, k_ij = n_j Wk + e_ij Wek, v_ij = n_j Wv + e_ij Wev.
  template <class T>
  PairQkv<T> relational_qkv(Session<T> & s, Var<T> nodes, Var<T> edges) const
  {
    const std::size_t n = nodes.rows();
    if (edges.rows() != n * n) {
      throw DimensionError("edges must cover all N*N ordered pairs");
    }
    const auto dst = pair_destinations(n);
    const auto src = pair_sources(n);
    PairQkv<T> r;
    r.q = add(gather_rows(node_q(s, nodes), dst), edge_q(s, edges));
    r.k = add(gather_rows(node_k(s, nodes), src), edge_k(s, edges));
    r.v = add(gather_rows(node_v(s, nodes), src), edge_v(s, edges));
    return r;
  }

  template <class T>
  AttentionResult<T> attention(Session<T> & s, Var<T> nodes, Var<T> edges) const
  {
    const PairQkv<T> qkv = relational_qkv(s, nodes, edges);
    return pair_attention(qkv.q, qkv.k, qkv.v, nodes.rows(), heads,
                          attention_logit_scale(width, heads, scale_mode));
  }

  template <class T>
  Var<T> node_update(Session<T> & s, Var<T> nodes, Var<T> edges) const
  {
    return node_update_fn(s, attention(s, nodes, edges).context, nodes);
  }

  /// m_ij = ReLU([e_ij; e_ji; n_i; n_j] Wm), over updated nodes.
  template <class T>
  Var<T> pair_message(Session<T> & s, Var<T> updated_nodes, Var<T> edges) const
  {
    const std::size_t n = updated_nodes.rows();
    Var<T> x = concat_cols<T>({
      edges,
      gather_rows(edges, pair_reversed(n)),
      gather_rows(updated_nodes, pair_destinations(n)),
      gather_rows(updated_nodes, pair_sources(n)),
    });
    return relu(message(s, x));
  }

  template <class T>
  Var<T> edge_update(Session<T> & s, Var<T> edges, Var<T> messages) const
  {
    return edge_update_fn(s, messages, edges);
  }

  template <class T>
  PrtState<T> operator()(Session<T> & s, PrtState<T> in) const
  {
    Var<T> nodes = node_update(s, in.nodes, in.edges);
    Var<T> msg = pair_message(s, nodes, in.edges);
    return PrtState<T>{nodes, edge_update(s, in.edges, msg)};
  }
};

}  // namespace mart

#endif  // MART__PRT_HPP_
