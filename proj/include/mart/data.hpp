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

#ifndef MART__DATA_HPP_
#define MART__DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mart/errors.hpp"
#include "mart/scene.hpp"

namespace mart
{

struct SynthConfig
{
  int num_scenes{100};
  int agents{8};
  int groups{2};
  int t_p{10};
  int t_f{20};
  double coherence{0.9};   // fraction of an agent's velocity shared with its group
  double noise_std{0.05};  // meters, added to every recorded position
  std::uint64_t seed{0};
  double overlap_prob{0.0};  // chance that an agent also joins a second group
  double speed_min{0.3};     // meters per frame
  double speed_max{0.6};
  double max_turn{0.05};     // radians per frame

  void validate() const
  {
    if (num_scenes < 0) throw ConfigError("num_scenes must be non-negative");
    if (agents < 1) throw ConfigError("agents must be positive");
    if (groups < 1 || groups > agents) throw ConfigError("groups must lie in [1, agents]");
    if (t_p < 2) throw ConfigError("t_p must be at least 2");
    if (t_f < 1) throw ConfigError("t_f must be positive");
    if (!(coherence >= 0.0 && coherence <= 1.0)) throw ConfigError("coherence must lie in [0, 1]");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
    if (!(overlap_prob >= 0.0 && overlap_prob <= 1.0)) throw ConfigError("overlap_prob must lie in [0, 1]");
    if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw ConfigError("bad speed range");
    if (!(max_turn >= 0.0)) throw ConfigError("max_turn must be non-negative");
  }
};

namespace detail
{

struct Heading
{
  double angle;
  double speed;
  double turn;

  double vx(std::size_t t) const { return speed * std::cos(angle + turn * static_cast<double>(t)); }
  double vy(std::size_t t) const { return speed * std::sin(angle + turn * static_cast<double>(t)); }
};

}  // namespace detail

/**
 * @brief Group-structured random scenes.
 *
 * Every group gets a slowly turning base velocity; group headings are spread
 * evenly around the circle with some jitter. An agent's velocity is
 * coherence * (mean of its groups' velocities) + (1 - coherence) * its own
 * private velocity. Recorded positions carry Gaussian noise.
 */
inline std::vector<Scene> generate_synthetic(const SynthConfig & cfg)
{
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double two_pi = 2.0 * std::numbers::pi;
  const auto n = static_cast<std::size_t>(cfg.agents);
  const auto g = static_cast<std::size_t>(cfg.groups);
  const auto tp = static_cast<std::size_t>(cfg.t_p);
  const auto tf = static_cast<std::size_t>(cfg.t_f);
  const double jitter = std::numbers::pi / (4.0 * static_cast<double>(g));

  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.num_scenes));
  for (int sc = 0; sc < cfg.num_scenes; ++sc) {
    const double base = uniform(0.0, two_pi);
    std::vector<detail::Heading> group_head(g);
    std::vector<double> cx(g);
    std::vector<double> cy(g);
    for (std::size_t k = 0; k < g; ++k) {
      group_head[k] = {base + two_pi * static_cast<double>(k) / static_cast<double>(g) +
                         uniform(-jitter, jitter),
                       uniform(cfg.speed_min, cfg.speed_max), uniform(-cfg.max_turn, cfg.max_turn)};
      cx[k] = uniform(-6.0, 6.0);
      cy[k] = uniform(-6.0, 6.0);
    }
    // round-robin over a shuffled order keeps every group non-empty
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> member_of(n);
    for (std::size_t r = 0; r < n; ++r) member_of[order[r]].push_back(r % g);
    if (g > 1) {
      for (std::size_t i = 0; i < n; ++i) {
        if (unit(rng) < cfg.overlap_prob) {
          std::size_t other = static_cast<std::size_t>(unit(rng) * static_cast<double>(g - 1));
          other = std::min(other, g - 2);
          if (other >= member_of[i][0]) ++other;
          member_of[i].push_back(other);
        }
      }
    }

    Scene s;
    s.id = "synth-" + std::to_string(sc);
    s.obs = Array<double>({n, tp, 2});
    s.fut = Array<double>({n, tf, 2});
    for (std::size_t i = 0; i < n; ++i) {
      const detail::Heading own{uniform(0.0, two_pi), uniform(cfg.speed_min, cfg.speed_max),
                                uniform(-cfg.max_turn, cfg.max_turn)};
      const std::size_t home = member_of[i][0];
      double x = cx[home] + 0.5 * gauss(rng);
      double y = cy[home] + 0.5 * gauss(rng);
      for (std::size_t t = 0; t < tp + tf; ++t) {
        const double px = x + cfg.noise_std * gauss(rng);
        const double py = y + cfg.noise_std * gauss(rng);
        Array<double> & dst = t < tp ? s.obs : *s.fut;
        const std::size_t len = t < tp ? tp : tf;
        const std::size_t tt = t < tp ? t : t - tp;
        dst[(i * len + tt) * 2] = px;
        dst[(i * len + tt) * 2 + 1] = py;
        double gvx = 0.0;
        double gvy = 0.0;
        for (std::size_t k : member_of[i]) {
          gvx += group_head[k].vx(t);
          gvy += group_head[k].vy(t);
        }
        gvx /= static_cast<double>(member_of[i].size());
        gvy /= static_cast<double>(member_of[i].size());
        x += cfg.coherence * gvx + (1.0 - cfg.coherence) * own.vx(t);
        y += cfg.coherence * gvy + (1.0 - cfg.coherence) * own.vy(t);
      }
    }
    Array<int> truth({n, n}, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k : member_of[i]) {
          if (std::find(member_of[j].begin(), member_of[j].end(), k) != member_of[j].end()) {
            truth[i * n + j] = 1;
          }
        }
      }
    }
    s.group_truth = std::move(truth);
    for (std::size_t i = 0; i < n; ++i) s.agent_ids.push_back(std::to_string(i));
    scenes.push_back(std::move(s));
  }
  return scenes;
}

// --- scene files ------------------------------------------------------------

inline nlohmann::json scene_to_json(const Scene & s)
{
  using nlohmann::json;
  const std::size_t n = s.agents();
  const std::size_t tp = s.t_p();
  const std::size_t tf = s.t_f();
  json agents = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    json rec;
    rec["id"] = s.agent_ids.empty() ? std::to_string(a) : s.agent_ids[a];
    json obs = json::array();
    for (std::size_t t = 0; t < tp; ++t) {
      obs.push_back({s.obs[(a * tp + t) * 2], s.obs[(a * tp + t) * 2 + 1]});
    }
    rec["obs"] = std::move(obs);
    if (s.fut) {
      json fut = json::array();
      for (std::size_t t = 0; t < tf; ++t) {
        fut.push_back({(*s.fut)[(a * tf + t) * 2], (*s.fut)[(a * tf + t) * 2 + 1]});
      }
      rec["fut"] = std::move(fut);
    }
    agents.push_back(std::move(rec));
  }
  json out;
  out["scene_id"] = s.id;
  out["agents"] = std::move(agents);
  if (s.group_truth) {
    json rows = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < n; ++j) row.push_back((*s.group_truth)[i * n + j]);
      rows.push_back(std::move(row));
    }
    out["group_truth"] = std::move(rows);
  }
  return out;
}

namespace detail
{

inline std::vector<double> read_track(const nlohmann::json & pts, const std::string & what)
{
  if (!pts.is_array()) throw ParseError(what + " must be an array of [x, y] pairs");
  std::vector<double> out;
  out.reserve(pts.size() * 2);
  for (const auto & p : pts) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError(what + " must be an array of [x, y] pairs");
    }
    out.push_back(p[0].get<double>());
    out.push_back(p[1].get<double>());
  }
  return out;
}

}  // namespace detail

/// Throws ParseError (bad structure) or FormatError (inconsistent horizons).
inline Scene scene_from_json(const nlohmann::json & j)
{
  if (!j.is_object() || !j.contains("scene_id") || !j.contains("agents") || !j["agents"].is_array()) {
    throw ParseError("record needs scene_id and an agents array");
  }
  Scene s;
  s.id = j["scene_id"].is_string() ? j["scene_id"].get<std::string>() : j["scene_id"].dump();
  const auto & agents = j["agents"];
  const std::size_t n = agents.size();
  if (n == 0) throw FormatError("scene " + s.id + " has no agents");
  std::vector<double> obs;
  std::vector<double> fut;
  std::size_t tp = 0;
  std::size_t tf = 0;
  bool labeled = false;
  for (std::size_t a = 0; a < n; ++a) {
    const auto & rec = agents[a];
    if (!rec.is_object() || !rec.contains("obs")) throw ParseError("agent record needs obs");
    if (rec.contains("id")) {
      s.agent_ids.push_back(rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump());
    } else {
      s.agent_ids.push_back(std::to_string(a));
    }
    std::vector<double> o = detail::read_track(rec["obs"], "obs");
    const bool has_fut = rec.contains("fut");
    if (a == 0) {
      tp = o.size() / 2;
      labeled = has_fut;
    } else if (o.size() / 2 != tp) {
      throw FormatError("scene " + s.id + ": agents disagree on T_p");
    } else if (has_fut != labeled) {
      throw FormatError("scene " + s.id + ": some agents lack fut");
    }
    obs.insert(obs.end(), o.begin(), o.end());
    if (has_fut) {
      std::vector<double> f = detail::read_track(rec["fut"], "fut");
      if (a == 0) {
        tf = f.size() / 2;
      } else if (f.size() / 2 != tf) {
        throw FormatError("scene " + s.id + ": agents disagree on T_f");
      }
      fut.insert(fut.end(), f.begin(), f.end());
    }
  }
  s.obs = Array<double>({n, tp, 2}, std::move(obs));
  if (labeled) s.fut = Array<double>({n, tf, 2}, std::move(fut));
  if (j.contains("group_truth")) {
    const auto & g = j["group_truth"];
    if (!g.is_array() || g.size() != n) throw FormatError("scene " + s.id + ": group_truth must be N x N");
    Array<int> truth({n, n});
    for (std::size_t r = 0; r < n; ++r) {
      if (!g[r].is_array() || g[r].size() != n) throw FormatError("scene " + s.id + ": group_truth must be N x N");
      for (std::size_t c = 0; c < n; ++c) {
        if (!g[r][c].is_number_integer()) throw ParseError("group_truth entries must be 0 or 1");
        truth[r * n + c] = g[r][c].get<int>() != 0 ? 1 : 0;
      }
    }
    s.group_truth = std::move(truth);
  }
  s.validate();
  return s;
}

/// One JSON object per line. Blank lines are skipped.
inline std::vector<Scene> read_scenes(std::istream & in)
{
  std::vector<Scene> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception & e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      out.push_back(scene_from_json(j));
    } catch (const FormatError & e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError & e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception & e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Scene> load_scenes(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scene file " + path);
  return read_scenes(in);
}

inline void write_scenes(const std::vector<Scene> & scenes, std::ostream & out)
{
  for (const auto & s : scenes) {
    out << scene_to_json(s).dump() << '\n';
  }
}

inline void save_scenes(const std::vector<Scene> & scenes, const std::string & path)
{
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scene file " + path);
  write_scenes(scenes, out);
  if (!out) throw DataError("failed while writing " + path);
}

// --- annotation tables ------------------------------------------------------

namespace detail
{

inline double parse_number(const std::string & tok, std::size_t lineno)
{
  double v = 0.0;
  const char * end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(lineno) + ": '" + tok + "' is not a number");
  }
  return v;
}

inline std::string id_string(double v)
{
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/**
 * @brief Sliding windows over a `frame agent x y` table.
 *
 * Windows span t_p + t_f consecutive annotated frames and start every
 * `stride` frames. Agents annotated in every frame of a window form one
 * scene; windows without such agents are dropped.
 */
inline std::vector<Scene> window_table(std::istream & in, const std::string & name, int t_p = 8,
                                       int t_f = 12, int stride = 1)
{
  if (t_p < 2 || t_f < 1 || stride < 1) throw ConfigError("window needs t_p >= 2, t_f >= 1, stride >= 1");
  std::map<double, std::map<double, std::pair<double, double>>> by_frame;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream row(line);
    std::vector<std::string> tok;
    for (std::string t; row >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 4) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 4 fields, got " + std::to_string(tok.size()));
    }
    const double frame = detail::parse_number(tok[0], lineno);
    const double agent = detail::parse_number(tok[1], lineno);
    const double x = detail::parse_number(tok[2], lineno);
    const double y = detail::parse_number(tok[3], lineno);
    if (!by_frame[frame].emplace(agent, std::make_pair(x, y)).second) {
      throw FormatError("line " + std::to_string(lineno) + ": agent " + tok[1] + " repeated in frame " + tok[0]);
    }
  }
  std::vector<double> frames;
  for (const auto & kv : by_frame) frames.push_back(kv.first);
  const auto span = static_cast<std::size_t>(t_p + t_f);
  const auto tp = static_cast<std::size_t>(t_p);
  const auto tf = static_cast<std::size_t>(t_f);
  std::vector<Scene> out;
  for (std::size_t start = 0; start + span <= frames.size(); start += static_cast<std::size_t>(stride)) {
    std::vector<double> agents;
    for (const auto & kv : by_frame[frames[start]]) {
      bool complete = true;
      for (std::size_t t = 1; t < span && complete; ++t) {
        complete = by_frame[frames[start + t]].count(kv.first) > 0;
      }
      if (complete) agents.push_back(kv.first);
    }
    if (agents.empty()) continue;
    Scene s;
    s.id = name + ":" + detail::id_string(frames[start]);
    const std::size_t n = agents.size();
    s.obs = Array<double>({n, tp, 2});
    s.fut = Array<double>({n, tf, 2});
    for (std::size_t a = 0; a < n; ++a) {
      s.agent_ids.push_back(detail::id_string(agents[a]));
      for (std::size_t t = 0; t < span; ++t) {
        const auto & p = by_frame[frames[start + t]][agents[a]];
        Array<double> & dst = t < tp ? s.obs : *s.fut;
        const std::size_t len = t < tp ? tp : tf;
        const std::size_t tt = t < tp ? t : t - tp;
        dst[(a * len + tt) * 2] = p.first;
        dst[(a * len + tt) * 2 + 1] = p.second;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Scene> window_tsv(const std::string & path, int t_p = 8, int t_f = 12, int stride = 1)
{
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return window_table(in, std::filesystem::path(path).stem().string(), t_p, t_f, stride);
}

}  // namespace mart

#endif  // MART__DATA_HPP_
