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
using mart::testing::max_abs_diff;
using mart::testing::random_array;

TEST(PositionalEncodingTest, RowZeroAndBounds)
{
  const Array<double> pe = positional_encoding(9, 12);
  for (std::size_t c = 0; c < 12; ++c) {
    EXPECT_EQ(pe(0, c), c % 2 == 0 ? 0.0 : 1.0);
  }
  for (double v : pe.data()) {
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
  // column pair i uses frequency 10000^(-2i/d)
  EXPECT_DOUBLE_EQ(pe(3, 4), std::sin(3.0 / std::pow(10000.0, 4.0 / 12.0)));
  EXPECT_DOUBLE_EQ(pe(3, 5), std::cos(3.0 / std::pow(10000.0, 4.0 / 12.0)));
  EXPECT_THROW(positional_encoding(4, 7), ConfigError);
}

TEST(NodeInitTest, ZeroInputsAndWeightsGiveZero)
{
  ParameterStore<double> store;
  NodeInitializer ni = NodeInitializer::create(store, "ni", 2, 3, 4);
  // zero weights: the positional encoding is also multiplied away by W2
  Tape<double> t;
  Session<double> s(t, store);
  const Array<double> out = ni(s, s.constant(Array<double>({5, 3, 2}))).value();
  EXPECT_EQ(out.shape(), (Shape{5, 4}));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(NodeInitTest, ScalarOracleTwoSteps)
{
  // T_p = 2, d_in = 1, d_n = 2
  ParameterStore<double> store;
  NodeInitializer ni = NodeInitializer::create(store, "ni", 1, 2, 2);
  const double w1[2] = {1.0, -0.5};
  const double b1[2] = {0.25, 0.1};
  const double w2[4][2] = {{1, 0}, {0, 1}, {2, 0}, {0, -1}};
  const double b2[2] = {0.3, -0.2};
  store.value("ni.embed.weight") = Array<double>::matrix({{w1[0], w1[1]}});
  store.value("ni.embed.bias") = Array<double>::vector({b1[0], b1[1]});
  store.value("ni.project.weight") =
    Array<double>::matrix({{w2[0][0], w2[0][1]}, {w2[1][0], w2[1][1]}, {w2[2][0], w2[2][1]}, {w2[3][0], w2[3][1]}});
  store.value("ni.project.bias") = Array<double>::vector({b2[0], b2[1]});
  const double x[2] = {0.7, -1.3};
  // step-by-step recomputation
  double flat[4];
  for (int step = 0; step < 2; ++step) {
    const double pe_sin = std::sin(static_cast<double>(step));
    const double pe_cos = std::cos(static_cast<double>(step));
    flat[step * 2 + 0] = x[step] * w1[0] + b1[0] + pe_sin;
    flat[step * 2 + 1] = x[step] * w1[1] + b1[1] + pe_cos;
  }
  double expect[2];
  for (int c = 0; c < 2; ++c) {
    expect[c] = b2[c];
    for (int r = 0; r < 4; ++r) expect[c] += flat[r] * w2[r][c];
  }
  Tape<double> t;
  Session<double> s(t, store);
  const Array<double> out = ni(s, s.constant(Array<double>({1, 2, 1}, {x[0], x[1]}))).value();
  EXPECT_NEAR(out[0], expect[0], 1e-15);
  EXPECT_NEAR(out[1], expect[1], 1e-15);
}

TEST(NodeInitTest, HistoryLengthMismatchIsShapeError)
{
  ParameterStore<double> store;
  NodeInitializer ni = NodeInitializer::create(store, "ni", 2, 4, 4);
  store.initialize(1);
  Tape<double> t;
  Session<double> s(t, store);
  EXPECT_THROW(ni(s, s.constant(Array<double>({2, 5, 2}))), DimensionError);
}

namespace
{

struct Inits
{
  ParameterStore<double> store;
  PairEdgeInitializer pair;
  HyperedgeInitializer hyper;

  explicit Inits(std::uint64_t seed, std::size_t d_n = 4, std::size_t d_h = 6, std::size_t d_e = 5)
  {
    pair = PairEdgeInitializer::create(store, "pair", d_n, d_h, d_e);
    hyper = HyperedgeInitializer::create(store, "hyper", d_n, d_h, d_e);
    store.initialize(seed);
  }
};

Array<double> row(const Array<double> & a, std::size_t r)
{
  const std::size_t c = a.cols();
  return Array<double>({1, c}, std::vector<double>(a.data().begin() + static_cast<std::ptrdiff_t>(r * c),
                                                   a.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * c)));
}

}  // namespace

TEST(PairEdgeTest, SingleAgentHasOneSelfLoop)
{
  Inits in(3);
  Tape<double> t;
  Session<double> s(t, in.store);
  const Array<double> n = random_array({1, 4}, 1);
  const Array<double> e = in.pair(s, s.constant(n)).value();
  EXPECT_EQ(e.shape(), (Shape{1, 5}));
  const Array<double> direct = in.pair.mlp(s, s.constant(Array<double>({1, 8}, {n[0], n[1], n[2], n[3], n[0], n[1], n[2], n[3]}))).value();
  EXPECT_EQ(e, direct);
}

TEST(PairEdgeTest, DirectedAndCoversAllPairs)
{
  Inits in(4);
  Tape<double> t;
  Session<double> s(t, in.store);
  const Array<double> n = random_array({3, 4}, 2);
  const Array<double> e = in.pair(s, s.constant(n)).value();
  ASSERT_EQ(e.rows(), 9u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      // e_ij  from [n_i; n_j]
      std::vector<double> cat;
      for (std::size_t c = 0; c < 4; ++c) cat.push_back(n(i, c));
      for (std::size_t c = 0; c < 4; ++c) cat.push_back(n(j, c));
      const Array<double> direct = in.pair.mlp(s, s.constant(Array<double>({1, 8}, cat))).value();
      EXPECT_LT(max_abs_diff(row(e, i * 3 + j), direct), 1e-15);
    }
  }
  EXPECT_GT(max_abs_diff(row(e, 0 * 3 + 1), row(e, 1 * 3 + 0)), 1e-6);
}

TEST(PairEdgeTest, ZeroNodesZeroBiasGiveZero)
{
  Inits in(5);
  Tape<double> t;
  Session<double> s(t, in.store);
  for (double v : in.pair(s, s.constant(Array<double>({3, 4}))).value().data()) EXPECT_EQ(v, 0.0);
}

TEST(HyperedgeInitTest, SingletonAndFullGroups)
{
  Inits in(6);
  Tape<double> t;
  Session<double> s(t, in.store);
  const Array<double> n = random_array({3, 4}, 3);
  Array<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const Array<double> h = in.hyper(s, s.constant(n), s.constant(eye)).value();
  const Array<double> direct = in.hyper.mlp(s, s.constant(n)).value();
  EXPECT_LT(max_abs_diff(h, direct), 1e-15);

  const Array<double> hf = in.hyper(s, s.constant(n), s.constant(Array<double>({3, 3}, 1.0))).value();
  for (std::size_t j = 1; j < 3; ++j) EXPECT_LT(max_abs_diff(row(hf, j), row(hf, 0)), 1e-15);
}

TEST(HyperedgeInitTest, GroupMeanMatchesScalarOracle)
{
  // agents 1 and 2 (0-based) form a group; agent 0 is alone.
  const Array<double> g = Array<double>::matrix({{1, 0, 0}, {0, 1, 1}, {0, 1, 1}});
  const Array<double> n = random_array({3, 4}, 7);
  Tape<double> t;
  const Array<double> m = hyperedge_member_mean(t.constant(g), t.constant(n)).value();
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(m(0, c), n(0, c), 1e-15);
    EXPECT_NEAR(m(1, c), 0.5 * (n(1, c) + n(2, c)), 1e-15);
    EXPECT_NEAR(m(2, c), 0.5 * (n(1, c) + n(2, c)), 1e-15);
  }
}

TEST(HyperedgeInitTest, EmptyHyperedgeIsInvariantViolation)
{
  Tape<double> t;
  const Array<double> g = Array<double>::matrix({{1, 0}, {1, 0}});
  EXPECT_THROW(hyperedge_member_mean(t.constant(g), t.constant(random_array({2, 3}, 1))), InvariantError);
}

TEST(InitializerTest, PermutationEquivariant)
{
  Inits in(8);
  const std::size_t n = 5;
  const Array<double> nodes = random_array({n, 4}, 9);
  const auto perm = mart::testing::random_permutation(n, 10);
  Array<int> gi = estimate_groups(nodes, 0.1);
  Array<double> g = gi.cast<double>();
  Array<double> pnodes({n, 4});
  Array<double> pg({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 4; ++c) pnodes(i, c) = nodes(perm[i], c);
    for (std::size_t j = 0; j < n; ++j) pg(i, j) = g(perm[i], perm[j]);
  }
  Tape<double> t;
  Session<double> s(t, in.store);
  const Array<double> e = in.pair(s, s.constant(nodes)).value();
  const Array<double> pe = in.pair(s, s.constant(pnodes)).value();
  const Array<double> h = in.hyper(s, s.constant(nodes), s.constant(g)).value();
  const Array<double> ph = in.hyper(s, s.constant(pnodes), s.constant(pg)).value();
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_LT(max_abs_diff(row(ph, i), row(h, perm[i])), 1e-12);
    for (std::size_t j = 0; j < n; ++j) {
      // pair edges have no summation over agents, so the permutation is exact
      EXPECT_EQ(row(pe, i * n + j), row(e, perm[i] * n + perm[j]));
    }
  }
}

TEST(InitializerTest, Deterministic)
{
  Inits a(11);
  Inits b(11);
  const Array<double> nodes = random_array({3, 4}, 12);
  Tape<double> t;
  Session<double> sa(t, a.store);
  Session<double> sb(t, b.store);
  EXPECT_EQ(a.pair(sa, sa.constant(nodes)).value(), b.pair(sb, sb.constant(nodes)).value());
}

TEST(SceneTest, DisplacementsRoundTrip)
{
  const Array<double> pos = random_array({3, 6, 2}, 13, -10, 10);
  const Array<double> d = to_displacements(pos);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_EQ(d[(a * 6) * 2], 0.0);
    EXPECT_EQ(d[(a * 6) * 2 + 1], 0.0);
  }
  Array<double> origin({3, 2});
  for (std::size_t a = 0; a < 3; ++a) {
    origin[a * 2] = pos[a * 12];
    origin[a * 2 + 1] = pos[a * 12 + 1];
  }
  EXPECT_LT(max_abs_diff(from_displacements(d, origin), pos), 1e-12);
}

TEST(SceneTest, ModelInputLayouts)
{
  Scene s;
  s.id = "x";
  s.obs = Array<double>({1, 3, 2}, {0, 0, 1, 2, 3, 5});
  const Array<double> rel = model_inputs<double>(s, 2);
  EXPECT_EQ(rel, Array<double>({1, 3, 2}, {0, 0, 1, 2, 2, 3}));
  const Array<double> both = model_inputs<double>(s, 4);
  EXPECT_EQ(both, Array<double>({1, 3, 4}, {0, 0, 0, 0, 1, 2, 1, 2, 3, 5, 2, 3}));
  EXPECT_THROW(model_inputs<double>(s, 3), ConfigError);
}
