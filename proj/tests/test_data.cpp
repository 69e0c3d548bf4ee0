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
#include <sstream>
#include <string>
#include <vector>

#include "mart/mart.hpp"
#include "support.hpp"

using namespace mart;

namespace
{

SynthConfig clean_config()
{
  SynthConfig c;
  c.num_scenes = 20;
  c.coherence = 1.0;
  c.noise_std = 0.0;
  c.seed = 3;
  return c;
}

// Mean over agent pairs of the cosine between their flattened displacement tracks.
double track_cosine(const Scene & s, std::size_t i, std::size_t j)
{
  const Array<double> d = to_displacements(s.obs);
  const std::size_t row = s.t_p() * 2;
  double dot = 0.0;
  double ni = 0.0;
  double nj = 0.0;
  for (std::size_t c = 2; c < row; ++c) {
    dot += d[i * row + c] * d[j * row + c];
    ni += d[i * row + c] * d[i * row + c];
    nj += d[j * row + c] * d[j * row + c];
  }
  return dot / std::sqrt(ni * nj);
}

// Same-group minus cross-group mean track cosine, over all scenes.
double planted_signal(const std::vector<Scene> & scenes)
{
  double same = 0.0;
  double cross = 0.0;
  std::size_t ns = 0;
  std::size_t nc = 0;
  for (const Scene & s : scenes) {
    for (std::size_t i = 0; i < s.agents(); ++i) {
      for (std::size_t j = i + 1; j < s.agents(); ++j) {
        if ((*s.group_truth)(i, j)) {
          same += track_cosine(s, i, j);
          ++ns;
        } else {
          cross += track_cosine(s, i, j);
          ++nc;
        }
      }
    }
  }
  return same / static_cast<double>(ns) - cross / static_cast<double>(nc);
}

const char * kScene =
  R"({"scene_id":"a","agents":[{"id":"7","obs":[[0,0],[1,0]],"fut":[[2,0]]},{"id":"9","obs":[[0,1],[1,1]],"fut":[[2,1]]}]})";

}  // namespace

TEST(SyntheticTest, FullCoherenceGivesIdenticalDisplacements)
{
  for (const Scene & s : generate_synthetic(clean_config())) {
    ASSERT_TRUE(s.group_truth);
    const Array<double> obs = to_displacements(s.obs);
    const Array<double> fut = to_displacements(*s.fut);
    const std::size_t n = s.agents();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!(*s.group_truth)(i, j) || i == j) continue;
        // skip the first entry of each track: it holds the start position
        for (std::size_t c = 2; c < s.t_p() * 2; ++c) {
          EXPECT_NEAR(obs[i * s.t_p() * 2 + c], obs[j * s.t_p() * 2 + c], 1e-12);
        }
        for (std::size_t c = 2; c < s.t_f() * 2; ++c) {
          EXPECT_NEAR(fut[i * s.t_f() * 2 + c], fut[j * s.t_f() * 2 + c], 1e-12);
        }
      }
    }
  }
}

TEST(SyntheticTest, ShapesAndTruth)
{
  SynthConfig c = clean_config();
  c.agents = 6;
  c.groups = 3;
  const std::vector<Scene> scenes = generate_synthetic(c);
  ASSERT_EQ(scenes.size(), 20u);
  for (const Scene & s : scenes) {
    EXPECT_EQ(s.obs.shape(), (Shape{6, 10, 2}));
    EXPECT_EQ(s.fut->shape(), (Shape{6, 20, 2}));
    EXPECT_EQ(s.agent_ids.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ((*s.group_truth)(i, i), 1);
      for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ((*s.group_truth)(i, j), (*s.group_truth)(j, i));
    }
  }
}

TEST(SyntheticTest, DeterministicUnderSeed)
{
  SynthConfig c = clean_config();
  c.coherence = 0.7;
  c.noise_std = 0.1;
  const auto a = generate_synthetic(c);
  const auto b = generate_synthetic(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].obs, b[i].obs);
    EXPECT_EQ(*a[i].fut, *b[i].fut);
    EXPECT_EQ(*a[i].group_truth, *b[i].group_truth);
  }
  c.seed = 4;
  EXPECT_NE(generate_synthetic(c)[0].obs, a[0].obs);
}

TEST(SyntheticTest, ZeroCoherenceCarriesNoGroupSignal)
{
  SynthConfig c = clean_config();
  c.num_scenes = 300;
  c.noise_std = 0.05;
  c.coherence = 0.0;
  EXPECT_LT(std::abs(planted_signal(generate_synthetic(c))), 0.05);
  c.coherence = 0.9;
  EXPECT_GT(planted_signal(generate_synthetic(c)), 0.5);
}

TEST(SyntheticTest, OverlapAddsSecondMemberships)
{
  SynthConfig c = clean_config();
  c.groups = 3;
  c.overlap_prob = 0.3;
  bool found = false;
  for (const Scene & s : generate_synthetic(c)) {
    const auto & g = *s.group_truth;
    for (std::size_t i = 0; i < s.agents() && !found; ++i) {
      for (std::size_t j = 0; j < s.agents() && !found; ++j) {
        for (std::size_t k = 0; k < s.agents() && !found; ++k) {
          found = g(i, j) && g(i, k) && !g(j, k);
        }
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(SyntheticTest, RejectsBadConfig)
{
  SynthConfig c;
  c.coherence = 1.5;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
  c = SynthConfig{};
  c.groups = 9;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
}

TEST(SceneIoTest, RoundTrip)
{
  SynthConfig c = clean_config();
  c.num_scenes = 5;
  const auto scenes = generate_synthetic(c);
  std::stringstream buf;
  write_scenes(scenes, buf);
  const auto back = read_scenes(buf);
  ASSERT_EQ(back.size(), scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    EXPECT_EQ(back[i].id, scenes[i].id);
    EXPECT_EQ(back[i].obs, scenes[i].obs);
    EXPECT_EQ(*back[i].fut, *scenes[i].fut);
    EXPECT_EQ(*back[i].group_truth, *scenes[i].group_truth);
    EXPECT_EQ(back[i].agent_ids, scenes[i].agent_ids);
  }
}

TEST(SceneIoTest, EmptyInputAndBlankLines)
{
  std::stringstream empty;
  EXPECT_TRUE(read_scenes(empty).empty());
  std::stringstream blanks(std::string("\n") + kScene + "\n   \n" + kScene + "\n");
  const auto scenes = read_scenes(blanks);
  ASSERT_EQ(scenes.size(), 2u);
  EXPECT_EQ(scenes[0].agent_ids, (std::vector<std::string>{"7", "9"}));
  EXPECT_EQ(scenes[0].t_p(), 2u);
  EXPECT_EQ(scenes[0].t_f(), 1u);
}

TEST(SceneIoTest, UnlabeledScene)
{
  std::stringstream in(R"({"scene_id":"u","agents":[{"obs":[[0,0],[1,1]]}]})");
  const auto scenes = read_scenes(in);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_FALSE(scenes[0].labeled());
}

TEST(SceneIoTest, TruncatedLineReportsLineNumber)
{
  const std::string good = kScene;
  std::stringstream in(good + "\n" + good.substr(0, good.size() / 2) + "\n");
  try {
    read_scenes(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError & e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(SceneIoTest, InconsistentHorizons)
{
  std::stringstream tp(R"({"scene_id":"m","agents":[{"obs":[[0,0],[1,0]]},{"obs":[[0,0],[1,0],[2,0]]}]})");
  EXPECT_THROW(read_scenes(tp), FormatError);
  std::stringstream tf(
    R"({"scene_id":"m","agents":[{"obs":[[0,0],[1,0]],"fut":[[2,0]]},{"obs":[[0,0],[1,0]],"fut":[[2,0],[3,0]]}]})");
  EXPECT_THROW(read_scenes(tf), FormatError);
  std::stringstream partial(R"({"scene_id":"m","agents":[{"obs":[[0,0],[1,0]],"fut":[[2,0]]},{"obs":[[0,0],[1,0]]}]})");
  EXPECT_THROW(read_scenes(partial), FormatError);
}

TEST(SceneIoTest, StructuralErrors)
{
  std::stringstream no_agents(R"({"scene_id":"x"})");
  EXPECT_THROW(read_scenes(no_agents), ParseError);
  std::stringstream bad_point(R"({"scene_id":"x","agents":[{"obs":[[0,0],[1]]}]})");
  EXPECT_THROW(read_scenes(bad_point), ParseError);
  std::stringstream nan_point(R"({"scene_id":"x","agents":[{"obs":[[0,0],["a",1]]}]})");
  EXPECT_THROW(read_scenes(nan_point), ParseError);
  EXPECT_THROW(load_scenes("/nonexistent/scenes.jsonl"), DataError);
}

namespace
{

std::string table(int frames, int agents, int skip_frame = -1, int skip_agent = -1)
{
  std::ostringstream os;
  for (int f = 0; f < frames; ++f) {
    for (int a = 0; a < agents; ++a) {
      if (f == skip_frame && a == skip_agent) continue;
      os << f * 10 << '\t' << a + 1 << '\t' << 0.1 * f + a << '\t' << -0.2 * f << '\n';
    }
  }
  return os.str();
}

}  // namespace

TEST(WindowTest, ExactSpanGivesOneScene)
{
  std::istringstream in(table(20, 3));
  const auto scenes = window_table(in, "eth", 8, 12, 20);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].id, "eth:0");
  EXPECT_EQ(scenes[0].obs.shape(), (Shape{3, 8, 2}));
  EXPECT_EQ(scenes[0].fut->shape(), (Shape{3, 12, 2}));
  EXPECT_EQ(scenes[0].agent_ids, (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_DOUBLE_EQ(scenes[0].obs[2 * 8 * 2 + 7 * 2], 0.7 + 2.0);
  EXPECT_DOUBLE_EQ((*scenes[0].fut)[(1 * 12 + 11) * 2 + 1], -0.2 * 19);
}

TEST(WindowTest, SlidingWindows)
{
  std::istringstream in(table(25, 2));
  const auto scenes = window_table(in, "eth", 8, 12, 1);
  ASSERT_EQ(scenes.size(), 6u);
  EXPECT_EQ(scenes[5].id, "eth:50");
}

TEST(WindowTest, IncompleteAgentsAreDropped)
{
  std::istringstream in(table(20, 3, 13, 1));
  const auto scenes = window_table(in, "eth", 8, 12, 1);
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].agent_ids, (std::vector<std::string>{"1", "3"}));
}

TEST(WindowTest, Errors)
{
  std::istringstream bad("0\t1\t0.5\tabc\n");
  EXPECT_THROW(window_table(bad, "x"), ParseError);
  std::istringstream short_row("0\t1\t0.5\n");
  EXPECT_THROW(window_table(short_row, "x"), ParseError);
  std::istringstream dup("0\t1\t0\t0\n0\t1\t1\t1\n");
  EXPECT_THROW(window_table(dup, "x"), FormatError);
  std::istringstream ok(table(5, 2));
  EXPECT_THROW(window_table(ok, "x", 1, 2, 1), ConfigError);
  EXPECT_TRUE(window_table(ok, "x", 4, 4, 1).empty());
}
