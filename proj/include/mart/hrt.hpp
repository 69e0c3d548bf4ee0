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

#ifndef MART__HRT_HPP_
#define MART__HRT_HPP_

#include <cstddef>
#include <string>

#include "mart/attention.hpp"
#include "mart/config.hpp"
#include "mart/features.hpp"
#include "mart/layers.hpp"

namespace mart
{

template <class T>
struct TokenQkv
{
  Var<T> q;  // N x d_n
  Var<T> k;
  Var<T> v;
};

template <class T>
struct HrtState
{
  Var<T> nodes;       // N x d_n
  Var<T> hyperedges;  // N x d_e
};

/**
 * @brief Hyper relational transformer layer.
 *
 * Each agent's query, key and value add the mean of the hyperedges it belongs
 * to. Attention runs over all agents; G only enters through those means.
 */
struct HrtLayer
{
  Linear node_q, node_k, node_v;     // d_n -> d_n
  Linear hyper_q, hyper_k, hyper_v;  // d_e -> d_n
  TransformerUpdate node_update_fn;
  Linear message;  // d_e + d_n -> d_h
  TransformerUpdate hyper_update_fn;
  std::size_t heads{1};
  std::size_t width{0};
  AttentionScale scale_mode{AttentionScale::head};

  template <class T>
  static HrtLayer create(
    ParameterStore<T> & store, const std::string & name, std::size_t d_n, std::size_t d_e,
    std::size_t d_h, std::size_t heads, AttentionScale scale_mode)
  {
    if (d_n % heads != 0) throw ConfigError("d_n must be divisible by heads");
    HrtLayer l;
    l.heads = heads;
    l.width = d_n;
    l.scale_mode = scale_mode;
    l.node_q = Linear::create(store, name + ".node_q", d_n, d_n);
    // keys carry no bias: a shift shared by every key cancels in the softmax
    l.node_k = Linear::create(store, name + ".node_k", d_n, d_n, false);
    l.node_v = Linear::create(store, name + ".node_v", d_n, d_n);
    l.hyper_q = Linear::create(store, name + ".hyper_q", d_e, d_n);
    l.hyper_k = Linear::create(store, name + ".hyper_k", d_e, d_n, false);
    l.hyper_v = Linear::create(store, name + ".hyper_v", d_e, d_n);
    l.node_update_fn = TransformerUpdate::create(store, name + ".node_update", d_n, d_n, d_h);
    l.message = Linear::create(store, name + ".message", d_e + d_n, d_h);
    l.hyper_update_fn = TransformerUpdate::create(store, name + ".hyper_update", d_h, d_e, d_h);
    return l;
  }

  template <class T>
  TokenQkv<T> hyper_qkv(Session<T> & s, Var<T> nodes, Var<T> hyperedges, Var<T> incidence) const
  {
    Var<T> agg = membership_mean(incidence, hyperedges);
    TokenQkv<T> r;
    r.q = add(node_q(s, nodes), hyper_q(s, agg));
    r.k = add(node_k(s, nodes), hyper_k(s, agg));
    r.v = add(node_v(s, nodes), hyper_v(s, agg));
    return r;
  }

  template <class T>
  AttentionResult<T> attention(Session<T> & s, Var<T> nodes, Var<T> hyperedges, Var<T> incidence) const
  {
    const TokenQkv<T> qkv = hyper_qkv(s, nodes, hyperedges, incidence);
    return token_attention(qkv.q, qkv.k, qkv.v, heads, attention_logit_scale(width, heads, scale_mode));
  }

  template <class T>
  Var<T> node_update(Session<T> & s, Var<T> nodes, Var<T> hyperedges, Var<T> incidence) const
  {
    return node_update_fn(s, attention(s, nodes, hyperedges, incidence).context, nodes);
  }

  /// m_i = ReLU([h_i; mean of updated member nodes of hyperedge i] Wm).
  template <class T>
  Var<T> hyper_message(Session<T> & s, Var<T> hyperedges, Var<T> updated_nodes, Var<T> incidence) const
  {
    Var<T> members = hyperedge_member_mean(incidence, updated_nodes);
    return relu(message(s, concat_cols<T>({hyperedges, members})));
  }

  template <class T>
  Var<T> hyperedge_update(Session<T> & s, Var<T> hyperedges, Var<T> messages) const
  {
    return hyper_update_fn(s, messages, hyperedges);
  }

  template <class T>
  HrtState<T> operator()(Session<T> & s, HrtState<T> in, Var<T> incidence) const
  {
    Var<T> nodes = node_update(s, in.nodes, in.hyperedges, incidence);
    Var<T> msg = hyper_message(s, in.hyperedges, nodes, incidence);
    return HrtState<T>{nodes, hyperedge_update(s, in.hyperedges, msg)};
  }
};

}  // namespace mart

#endif  // MART__HRT_HPP_
