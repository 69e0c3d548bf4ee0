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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mart/mart.hpp"
#include "support.hpp"

using namespace mart;
using namespace mart::testing;

namespace
{

struct PrtFixture
{
  ParameterStore<double> store;
  PrtLayer layer;

  PrtFixture(std::size_t d_n, std::size_t d_e, std::size_t d_h, std::size_t heads, std::uint64_t seed)
  {
    layer = PrtLayer::create(store, "prt", d_n, d_e, d_h, heads, AttentionScale::head);
    store.initialize(seed);
    randomize(store, seed + 1000);
  }
};

}  // namespace

TEST(PrtAttentionTest, SingleAgentAttendsToItself)
{
  PrtFixture f(4, 3, 8, 2, 1);
  Tape<double> t;
  Session<double> s(t, f.store);
  auto nodes = s.constant(random_array({1, 4}, 2));
  auto edges = s.constant(random_array({1, 3}, 3));
  const AttentionResult<double> a = f.layer.attention(s, nodes, edges);
  ASSERT_EQ(a.weights.size(), 2u);
  for (const auto & w : a.weights) EXPECT_NEAR(w.value()[0], 1.0, 1e-15);
  const PairQkv<double> qkv = f.layer.relational_qkv(s, nodes, edges);
  EXPECT_LE(max_abs_diff(a.context.value(), qkv.v.value()), 1e-15);
}

TEST(PrtAttentionTest, TwoAgentScalarOracle)
{
  PrtFixture f(1, 1, 2, 1, 4);
  const Array<double> n = random_array({2, 1}, 5);
  const Array<double> e = random_array({4, 1}, 6);
  auto w = [&](const Linear & l) { return f.store.value(l.weight)[0]; };
  auto b = [&](const Linear & l) { return l.has_bias() ? f.store.value(l.bias)[0] : 0.0; };
  const PrtLayer & L = f.layer;
  Tape<double> t;
  Session<double> s(t, f.store);
  const Array<double> ctx = L.attention(s, s.constant(n), s.constant(e)).context.value();
  for (std::size_t i = 0; i < 2; ++i) {
    double logit[2];
    double val[2];
    for (std::size_t j = 0; j < 2; ++j) {
      const double eij = e[i * 2 + j];
      const double q = n[i] * w(L.node_q) + b(L.node_q) + eij * w(L.edge_q) + b(L.edge_q);
      const double k = n[j] * w(L.node_k) + eij * w(L.edge_k);
      val[j] = n[j] * w(L.node_v) + b(L.node_v) + eij * w(L.edge_v) + b(L.edge_v);
      logit[j] = q * k;  // head width 1, so the scale is 1
    }
    const double a0 = 1.0 / (1.0 + std::exp(logit[1] - logit[0]));
    EXPECT_NEAR(ctx[i], a0 * val[0] + (1.0 - a0) * val[1], 1e-14);
  }
}

TEST(PrtAttentionTest, KeysHaveNoBias)
{
  PrtFixture f(4, 4, 8, 2, 7);
  EXPECT_FALSE(f.layer.node_k.has_bias());
  EXPECT_FALSE(f.layer.edge_k.has_bias());
  EXPECT_TRUE(f.layer.node_q.has_bias());
  EXPECT_TRUE(f.layer.edge_v.has_bias());
}

TEST(PrtAttentionTest, LogitScaleModes)
{
  EXPECT_DOUBLE_EQ(attention_logit_scale(64, 8, AttentionScale::head), 1.0 / std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(attention_logit_scale(64, 8, AttentionScale::model), 1.0 / 8.0);
  EXPECT_THROW(attention_logit_scale(10, 3, AttentionScale::head), ConfigError);
  ParameterStore<double> store;
  EXPECT_THROW(PrtLayer::create(store, "p", 10, 4, 8, 3, AttentionScale::head), ConfigError);
}

TEST(PrtAttentionTest, EdgeCountMismatch)
{
  PrtFixture f(4, 3, 8, 2, 8);
  Tape<double> t;
  Session<double> s(t, f.store);
  EXPECT_THROW(f.layer.attention(s, s.constant(random_array({3, 4}, 1)), s.constant(random_array({8, 3}, 2))),
               DimensionError);
}

TEST(PrtMessageTest, ConcatenationOrder)
{
  PrtFixture f(1, 1, 4, 1, 9);
  Array<double> & wm = f.store.value(f.layer.message.weight);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) wm(r, c) = r == c ? 1.0 : 0.0;
  }
  for (double & v : f.store.value(f.layer.message.bias).data()) v = 0.0;
  // positive, distinct entries so the ReLU passes everything through
  const Array<double> nodes = Array<double>::matrix({{100}, {200}, {300}});
  Array<double> edges({9, 1});
  for (std::size_t r = 0; r < 9; ++r) edges[r] = 1.0 + static_cast<double>(r);
  Tape<double> t;
  Session<double> s(t, f.store);
  const Array<double> m = f.layer.pair_message(s, s.constant(nodes), s.constant(edges)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t r = i * 3 + j;
      EXPECT_EQ(m(r, 0), edges[i * 3 + j]);
      EXPECT_EQ(m(r, 1), edges[j * 3 + i]);
      EXPECT_EQ(m(r, 2), nodes[i]);
      EXPECT_EQ(m(r, 3), nodes[j]);
    }
  }
}

TEST(PrtLayerTest, CollapsesToVanillaTransformer)
{
  for (std::size_t heads : {1, 2, 4}) {
    PrtFixture f(8, 5, 16, heads, 10 + heads);
    for (const Linear * l : {&f.layer.edge_q, &f.layer.edge_k, &f.layer.edge_v}) zero_linear(f.store, *l);
    const Array<double> nodes = random_array({5, 8}, 20 + heads);
    Tape<double> t;
    Session<double> s(t, f.store);
    const PrtState<double> out = f.layer(s, PrtState<double>{s.constant(nodes), s.constant(Array<double>({25, 5}))});
    const Mat ref = vanilla_encoder_layer(to_mat(nodes), f.store, f.layer.node_q, f.layer.node_k, f.layer.node_v,
                                          f.layer.node_update_fn, heads);
    EXPECT_LE(max_abs_diff(out.nodes.value(), ref), 1e-10) << heads;
  }
}

TEST(PrtLayerTest, PermutationEquivariant)
{
  PrtFixture f(8, 6, 12, 2, 30);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const Array<double> nodes = random_array({n, 8}, 40 + trial);
    const Array<double> edges = random_array({n * n, 6}, 60 + trial);
    const auto p = random_permutation(n, 80 + trial);
    const auto pp = permuted_pairs(p);
    Tape<double> t;
    Session<double> s(t, f.store);
    const PrtState<double> a = f.layer(s, PrtState<double>{s.constant(nodes), s.constant(edges)});
    const PrtState<double> b =
      f.layer(s, PrtState<double>{s.constant(take_rows(nodes, p)), s.constant(take_rows(edges, pp))});
    EXPECT_LE(max_abs_diff(take_rows(a.nodes.value(), p), b.nodes.value()), 1e-10);
    EXPECT_LE(max_abs_diff(take_rows(a.edges.value(), pp), b.edges.value()), 1e-10);
  }
}

TEST(PrtLayerTest, GradientsMatchFiniteDifferences)
{
  PrtFixture f(4, 3, 6, 2, 50);
  const Array<double> wn = random_array({3, 4}, 51);
  const Array<double> we = random_array({9, 3}, 52);
  const double err = composite_grad_error(
    [&](Tape<double> & t, const std::vector<Var<double>> & v) {
      Session<double> s(t, f.store);
      const PrtState<double> out = f.layer(s, PrtState<double>{v[0], v[1]});
      return add(sum_all(mul(out.nodes, t.constant(wn))), sum_all(mul(out.edges, t.constant(we))));
    },
    {random_array({3, 4}, 53), random_array({9, 3}, 54)});
  EXPECT_LE(err, 1e-6);
}

TEST(PrtLayerTest, OutputShapesAndDeterminism)
{
  PrtFixture f(8, 6, 12, 4, 70);
  const Array<double> nodes = random_array({4, 8}, 71);
  const Array<double> edges = random_array({16, 6}, 72);
  Tape<double> t;
  Session<double> s(t, f.store);
  const PrtState<double> a = f.layer(s, PrtState<double>{s.constant(nodes), s.constant(edges)});
  const PrtState<double> b = f.layer(s, PrtState<double>{s.constant(nodes), s.constant(edges)});
  EXPECT_EQ(a.nodes.shape(), (Shape{4, 8}));
  EXPECT_EQ(a.edges.shape(), (Shape{16, 6}));
  EXPECT_EQ(a.nodes.value(), b.nodes.value());
  EXPECT_EQ(a.edges.value(), b.edges.value());
  EXPECT_TRUE(all_finite(a.edges.value()));
}
