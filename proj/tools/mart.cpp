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

// Command-line front end: synth, train, eval, predict, groups, gradcheck,
// count-params, count-macs. Logs go to stdout as one JSON object per line;
// errors go to stderr with a nonzero exit code.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mart/mart.hpp"

namespace
{

using KeyValues = std::map<std::string, std::string>;

/// Registers `--key value` for every key and merges them over an optional config file.
class Overrides
{
public:
  Overrides(CLI::App * app, const std::vector<std::string> & keys)
  {
    app->add_option("--config", path_, "flat key=value file");
    for (const auto & k : keys) {
      app->add_option("--" + k, values_[k], "override '" + k + "'");
    }
  }

  KeyValues merged() const
  {
    KeyValues kv;
    if (path_) kv = mart::load_key_values(*path_);
    for (const auto & [k, v] : values_) {
      if (v) kv[k] = *v;
    }
    return kv;
  }

private:
  std::optional<std::string> path_;
  std::map<std::string, std::optional<std::string>> values_;
};

const std::vector<std::string> & synth_keys()
{
  static const std::vector<std::string> k = {"num_scenes", "agents", "groups", "t_p", "t_f", "coherence",
                                             "noise_std", "seed", "overlap_prob", "speed_min", "speed_max",
                                             "max_turn"};
  return k;
}

mart::SynthConfig synth_config(const KeyValues & kv)
{
  mart::SynthConfig c;
  for (const auto & [k, v] : kv) {
    try {
      if (k == "num_scenes") c.num_scenes = std::stoi(v);
      else if (k == "agents") c.agents = std::stoi(v);
      else if (k == "groups") c.groups = std::stoi(v);
      else if (k == "t_p") c.t_p = std::stoi(v);
      else if (k == "t_f") c.t_f = std::stoi(v);
      else if (k == "coherence") c.coherence = std::stod(v);
      else if (k == "noise_std") c.noise_std = std::stod(v);
      else if (k == "seed") c.seed = std::stoull(v);
      else if (k == "overlap_prob") c.overlap_prob = std::stod(v);
      else if (k == "speed_min") c.speed_min = std::stod(v);
      else if (k == "speed_max") c.speed_max = std::stod(v);
      else if (k == "max_turn") c.max_turn = std::stod(v);
      else throw mart::ConfigError("unknown synth key '" + k + "'");
    } catch (const std::logic_error & e) {
      if (dynamic_cast<const mart::Error *>(&e)) throw;
      throw mart::ConfigError("bad value '" + v + "' for key " + k);
    }
  }
  c.validate();
  return c;
}

mart::TrainConfig train_config(const KeyValues & kv, mart::TrainConfig base = {})
{
  for (const auto & [k, v] : kv) base.set(k, v);
  base.validate();
  return base;
}

/// Checkpoint config, after checking that explicit model keys agree with it.
mart::TrainConfig checkpoint_config(const mart::Checkpoint & ck, const KeyValues & kv)
{
  static const std::set<std::string> model_keys = {"d_in", "t_p", "t_f", "d_n", "d_e", "d_h", "d_dec",
                                                   "layers", "heads", "k", "attention_scale"};
  const KeyValues saved = ck.config.to_map();
  mart::TrainConfig cfg = ck.config;
  for (const auto & [k, v] : kv) {
    if (model_keys.count(k)) {
      mart::TrainConfig probe = ck.config;
      probe.set(k, v);
      if (probe.to_map().at(k) != saved.at(k)) {
        throw mart::VersionError("config key " + k + "=" + v + " differs from the checkpoint (" + saved.at(k) + ")");
      }
    } else {
      cfg.set(k, v);
    }
  }
  cfg.validate();
  return cfg;
}

void emit(const nlohmann::json & j) { std::cout << j.dump() << '\n' << std::flush; }

/// Writes JSON lines to a file, or to stdout for "-".
class LineSink
{
public:
  explicit LineSink(const std::string & path)
  {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw mart::DataError("cannot write " + path);
    }
  }
  void operator()(const nlohmann::json & j) { (file_ ? *file_ : std::cout) << j.dump() << '\n'; }

private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Multiscale relational transformer for multi-agent trajectory prediction"};
  app.require_subcommand(1);

  // synth
  auto * synth = app.add_subcommand("synth", "generate group-structured synthetic scenes");
  Overrides synth_over(synth, synth_keys());
  std::string synth_out = "-";
  synth->add_option("--out", synth_out, "scene file (JSON lines), '-' for stdout");

  // train
  auto * train = app.add_subcommand("train", "train on a scene file");
  Overrides train_over(train, mart::TrainConfig::keys());
  std::string train_data;
  std::string train_out;
  std::string train_resume;
  train->add_option("--data", train_data, "training scenes")->required();
  train->add_option("--out", train_out, "checkpoint to write")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  // eval
  auto * eval = app.add_subcommand("eval", "minADE/minFDE of a checkpoint");
  Overrides eval_over(eval, mart::TrainConfig::keys());
  std::string eval_ckpt;
  std::string eval_data;
  int eval_k = 0;
  bool eval_baseline = false;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint")->required();
  eval->add_option("--data", eval_data, "labeled scenes")->required();
  eval->add_option("--eval-k", eval_k, "heads to score (0: all)");
  eval->add_flag("--baseline", eval_baseline, "also report the constant-velocity baseline");

  // predict / groups
  auto * predict = app.add_subcommand("predict", "dump K predicted trajectories per scene");
  Overrides predict_over(predict, mart::TrainConfig::keys());
  std::string predict_ckpt;
  std::string predict_data;
  std::string predict_out = "-";
  predict->add_option("--ckpt", predict_ckpt, "checkpoint")->required();
  predict->add_option("--data", predict_data, "scenes")->required();
  predict->add_option("--out", predict_out, "output file, '-' for stdout");

  auto * groups = app.add_subcommand("groups", "dump the estimated group incidence per scene");
  Overrides groups_over(groups, mart::TrainConfig::keys());
  std::string groups_ckpt;
  std::string groups_data;
  std::string groups_out = "-";
  groups->add_option("--ckpt", groups_ckpt, "checkpoint")->required();
  groups->add_option("--data", groups_data, "scenes")->required();
  groups->add_option("--out", groups_out, "output file, '-' for stdout");

  // gradcheck
  auto * gc = app.add_subcommand("gradcheck", "end-to-end gradient check in double precision");
  Overrides gc_over(gc, mart::TrainConfig::keys());
  mart::GradcheckOptions gc_opts;
  gc->add_option("--eps", gc_opts.eps, "finite-difference step");
  gc->add_option("--tol", gc_opts.tol, "max relative error");
  gc->add_option("--agents", gc_opts.agents, "agents in the check scene");

  // counting
  auto * cp = app.add_subcommand("count-params", "learnable parameter total");
  Overrides cp_over(cp, mart::TrainConfig::keys());
  auto * cm = app.add_subcommand("count-macs", "multiply-accumulates of one forward pass");
  Overrides cm_over(cm, mart::TrainConfig::keys());
  std::uint64_t mac_agents = 10;
  cm->add_option("--agents", mac_agents, "agents in the scene");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const mart::SynthConfig cfg = synth_config(synth_over.merged());
      const auto scenes = mart::generate_synthetic(cfg);
      if (synth_out == "-") {
        mart::write_scenes(scenes, std::cout);
      } else {
        mart::save_scenes(scenes, synth_out);
        emit({{"event", "synth"}, {"scenes", scenes.size()}, {"out", synth_out}});
      }
    } else if (train->parsed()) {
      const KeyValues kv = train_over.merged();
      std::optional<mart::Checkpoint> resume;
      mart::TrainConfig cfg;
      if (!train_resume.empty()) {
        resume = mart::load_checkpoint(train_resume);
        cfg = checkpoint_config(*resume, kv);
      } else {
        cfg = train_config(kv);
      }
      const auto scenes = mart::load_scenes(train_data);
      auto result = mart::train(cfg, scenes, resume, [](const mart::EpochLog & e) {
        nlohmann::json j = mart::to_json(e);
        j["event"] = "epoch";
        emit(j);
      });
      mart::save_checkpoint(result.checkpoint, train_out);
      emit({{"event", "checkpoint"}, {"out", train_out}, {"step", result.checkpoint.optimizer->step}});
    } else if (eval->parsed()) {
      const mart::Checkpoint ck = mart::load_checkpoint(eval_ckpt);
      const mart::TrainConfig cfg = checkpoint_config(ck, eval_over.merged());
      const mart::MartModel<float> model(cfg.model, ck.params);
      const auto scenes = mart::load_scenes(eval_data);
      emit(mart::to_json(mart::evaluate(model, scenes, eval_k, cfg.metric_mode)));
      if (eval_baseline) {
        nlohmann::json j = mart::to_json(mart::evaluate_constant_velocity(scenes, cfg.metric_mode));
        j["baseline"] = "constant_velocity";
        emit(j);
      }
    } else if (predict->parsed() || groups->parsed()) {
      const bool is_predict = predict->parsed();
      const mart::Checkpoint ck = mart::load_checkpoint(is_predict ? predict_ckpt : groups_ckpt);
      const mart::TrainConfig cfg =
        checkpoint_config(ck, is_predict ? predict_over.merged() : groups_over.merged());
      const mart::MartModel<float> model(cfg.model, ck.params);
      const auto scenes = mart::load_scenes(is_predict ? predict_data : groups_data);
      mart::check_scenes(scenes, cfg.model, false);
      LineSink sink(is_predict ? predict_out : groups_out);
      for (const auto & s : scenes) {
        sink(is_predict ? mart::prediction_json(s, model.predict(s)) : mart::groups_json(s, model.groups(s)));
      }
    } else if (gc->parsed()) {
      const KeyValues kv = gc_over.merged();
      mart::TrainConfig base;
      base.model = mart::gradcheck_config();
      const mart::TrainConfig cfg = train_config(kv, base);
      gc_opts.seed = cfg.seed;
      gc_opts.reduction = cfg.loss_reduction;
      const mart::GradcheckReport r = mart::gradcheck(cfg.model, gc_opts);
      nlohmann::json groups_j = nlohmann::json::object();
      for (const auto & g : r.groups) groups_j[g.name] = g.max_rel_error;
      emit({{"event", "gradcheck"},
            {"passed", r.passed},
            {"max_rel_error", r.max_rel_error},
            {"worst_param", r.worst_param},
            {"smooth_max_rel_error", r.smooth_max_rel_error},
            {"age_adjoint_error", r.age_adjoint_error},
            {"threshold_adjoint_error", r.threshold_adjoint_error},
            {"step_inputs_in_support", r.step_inputs_in_support},
            {"skipped_incidence_flips", r.skipped_incidence_flips},
            {"groups", groups_j},
            {"failure", r.failure}});
      if (!r.passed) {
        std::cerr << "mart: gradcheck failed: " << r.failure << '\n';
        return 1;
      }
    } else if (cp->parsed()) {
      const mart::TrainConfig cfg = train_config(cp_over.merged());
      emit({{"event", "count-params"}, {"params", mart::count_params(cfg.model)}});
    } else if (cm->parsed()) {
      const mart::TrainConfig cfg = train_config(cm_over.merged());
      const mart::MacBreakdown b = mart::count_mac_breakdown(cfg.model, mac_agents);
      nlohmann::json parts = nlohmann::json::object();
      for (const auto & [name, v] : b.parts) parts[name] = v;
      emit({{"event", "count-macs"}, {"agents", mac_agents}, {"macs", b.total()}, {"breakdown", parts}});
    }
  } catch (const std::exception & e) {
    std::cerr << "mart: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
