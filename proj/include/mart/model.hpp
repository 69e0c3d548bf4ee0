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

#ifndef MART__MODEL_HPP_
#define MART__MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mart/age.hpp"
#include "mart/config.hpp"
#include "mart/decoder.hpp"
#include "mart/features.hpp"
#include "mart/hrt.hpp"
#include "mart/params.hpp"
#include "mart/prt.hpp"
#include "mart/scene.hpp"

namespace mart
{

/// Parameter indices of every sub-module; independent of precision.
struct ModelLayout
{
  NodeInitializer node_init;
  GroupEstimator age;
  PairEdgeInitializer pair_init;
  HyperedgeInitializer hyper_init;
  std::vector<PrtLayer> prt;
  std::vector<HrtLayer> hrt;
  Decoder decoder;
};

/// Registers all parameters in a fixed order and returns their layout.
template <class T>
ModelLayout build_layout(ParameterStore<T> & store, const ModelConfig & cfg)
{
  cfg.validate();
  const auto u = [](int v) { return static_cast<std::size_t>(v); };
  ModelLayout m;
  m.node_init = NodeInitializer::create(store, "node_init", u(cfg.d_in), u(cfg.t_p), u(cfg.d_n));
  m.age = GroupEstimator::create(store, "age", cfg.threshold_init);
  m.pair_init = PairEdgeInitializer::create(store, "pair_init", u(cfg.d_n), u(cfg.d_h), u(cfg.d_e));
  m.hyper_init = HyperedgeInitializer::create(store, "hyper_init", u(cfg.d_n), u(cfg.d_h), u(cfg.d_e));
  for (int l = 0; l < cfg.layers; ++l) {
    m.prt.push_back(PrtLayer::create(store, "prt." + std::to_string(l), u(cfg.d_n), u(cfg.d_e),
                                  u(cfg.d_h), u(cfg.heads), cfg.attention_scale));
  }
  for (int l = 0; l < cfg.layers; ++l) {
    m.hrt.push_back(HrtLayer::create(store, "hrt." + std::to_string(l), u(cfg.d_n), u(cfg.d_e),
                                  u(cfg.d_h), u(cfg.heads), cfg.attention_scale));
  }
  m.decoder = Decoder::create(store, "decoder", u(cfg.d_n), u(cfg.d_dec), u(cfg.t_f), u(cfg.k));
  return m;
}

struct ForwardOptions
{
  StepGradient step_gradient{StepGradient::straight_through};
  std::vector<std::string> * trace{nullptr};  // receives stage names in execution order
};

template <class T>
struct EncoderOutput
{
  Var<T> n0;
  Var<T> n_pair;
  Var<T> n_group;
  Var<T> pair_edges;
  Var<T> hyperedges;
  GroupEstimate<T> groups;
};

/**
 * @brief Encoder pass.
 *
 * nodes -> groups -> pair edges and hyperedges -> L PRT layers and L HRT
 * layers. Both branches start from the same initial nodes; G is fixed for
 * every layer.
 */
template <class T>
EncoderOutput<T> encode(
  Session<T> & s, const ModelLayout & m, const ModelConfig & cfg, Var<T> inputs,
  const ForwardOptions & opts = {})
{
  auto mark = [&](const char * stage) {
    if (opts.trace) opts.trace->emplace_back(stage);
  };
  if (inputs.value().rank() != 3 || inputs.shape()[1] != static_cast<std::size_t>(cfg.t_p) ||
      inputs.shape()[2] != static_cast<std::size_t>(cfg.d_in)) {
    throw ConfigError("scene inputs " + shape_str(inputs.shape()) + " do not match the configured T_p/d_in");
  }
  EncoderOutput<T> out;
  out.n0 = m.node_init(s, inputs);
  mark("nodes");
  out.groups = m.age(s, out.n0, AgeOptions{cfg.ste_variant, opts.step_gradient});
  mark("groups");
  Var<T> edges = m.pair_init(s, out.n0);
  mark("pair_edges");
  Var<T> hyper = m.hyper_init(s, out.n0, out.groups.incidence);
  mark("hyperedges");
  PrtState<T> ps{out.n0, edges};
  for (const auto & layer : m.prt) {
    ps = layer(s, ps);
    mark("prt");
  }
  HrtState<T> hs{out.n0, hyper};
  for (const auto & layer : m.hrt) {
    hs = layer(s, hs, out.groups.incidence);
    mark("hrt");
  }
  out.n_pair = ps.nodes;
  out.pair_edges = ps.edges;
  out.n_group = hs.nodes;
  out.hyperedges = hs.hyperedges;
  return out;
}

template <class T>
struct ForwardResult
{
  EncoderOutput<T> enc;
  std::vector<Var<T>> heads;  // per head N x (T_f*2) offsets from the last observation
};

template <class T>
ForwardResult<T> forward(
  Session<T> & s, const ModelLayout & m, const ModelConfig & cfg, const Scene & scene,
  const ForwardOptions & opts = {})
{
  if (scene.t_p() != static_cast<std::size_t>(cfg.t_p)) {
    throw ConfigError("scene " + scene.id + " has T_p=" + std::to_string(scene.t_p()) +
                      " but the model expects " + std::to_string(cfg.t_p));
  }
  ForwardResult<T> r;
  r.enc = encode(s, m, cfg, s.constant(model_inputs<T>(scene, cfg.d_in)), opts);
  r.heads = m.decoder(s, r.enc.n0, r.enc.n_pair, r.enc.n_group);
  return r;
}

template <class T>
Var<T> scene_loss(
  Session<T> & s, const ModelLayout & m, const ModelConfig & cfg, const Scene & scene,
  LossReduction reduction, const ForwardOptions & opts = {})
{
  if (!scene.labeled()) {
    throw DataError("scene " + scene.id + " is unlabeled");
  }
  if (scene.t_f() != static_cast<std::size_t>(cfg.t_f)) {
    throw ConfigError("scene " + scene.id + " has T_f=" + std::to_string(scene.t_f()) +
                      " but the model expects " + std::to_string(cfg.t_f));
  }
  ForwardResult<T> r = forward(s, m, cfg, scene, opts);
  return variety_loss(r.heads, s.constant(future_offsets<T>(scene)), reduction);
}

/// Head outputs as absolute positions K x N x T_f x 2.
template <class T>
Array<double> head_positions(const std::vector<Var<T>> & heads, const Scene & scene, std::size_t t_f)
{
  const std::size_t n = scene.agents();
  const Array<double> last = last_observed(scene);
  Array<double> out({heads.size(), n, t_f, 2});
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const Array<T> & v = heads[h].value();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t t = 0; t < t_f; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
          out[((h * n + a) * t_f + t) * 2 + c] =
            static_cast<double>(v[a * t_f * 2 + t * 2 + c]) + last[a * 2 + c];
        }
      }
    }
  }
  return out;
}

template <class T>
Array<int> incidence_to_int(const Array<T> & g)
{
  Array<int> out(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] > T{0.5} ? 1 : 0;
  return out;
}

/// A configured model: parameters plus layout.
template <class T>
class MartModel
{
public:
  explicit MartModel(const ModelConfig & cfg, std::uint64_t seed = 0) : cfg_(cfg)
  {
    layout_ = build_layout(params_, cfg_);
    params_.initialize(seed);
  }

  MartModel(const ModelConfig & cfg, ParameterStore<T> params) : cfg_(cfg)
  {
    ParameterStore<T> fresh;
    layout_ = build_layout(fresh, cfg_);
    if (fresh.count() != params.count()) {
      throw VersionError("parameter count does not match the configuration");
    }
    for (std::size_t i = 0; i < fresh.count(); ++i) {
      if (fresh.name(i) != params.name(i) || fresh.spec(i).shape != params.spec(i).shape) {
        throw VersionError("parameter " + params.name(i) + " does not match the configuration");
      }
    }
    params_ = std::move(params);
  }

  const ModelConfig & config() const noexcept { return cfg_; }
  const ModelLayout & layout() const noexcept { return layout_; }
  ParameterStore<T> & params() noexcept { return params_; }
  const ParameterStore<T> & params() const noexcept { return params_; }

  /// K x N x T_f x 2 absolute predicted positions.
  Array<double> predict(const Scene & scene) const
  {
    Tape<T> tape;
    Session<T> s(tape, params_);
    ForwardResult<T> r = forward(s, layout_, cfg_, scene);
    return head_positions(r.heads, scene, static_cast<std::size_t>(cfg_.t_f));
  }

  Array<int> groups(const Scene & scene) const
  {
    Tape<T> tape;
    Session<T> s(tape, params_);
    EncoderOutput<T> e =
      encode(s, layout_, cfg_, s.constant(model_inputs<T>(scene, cfg_.d_in)));
    return incidence_to_int(e.groups.incidence.value());
  }

  double threshold() const { return std::tanh(static_cast<double>(params_.value(layout_.age.threshold_raw)[0])); }

  struct LossGrad
  {
    double loss;
    Gradients<T> grads;
  };

  LossGrad loss_and_grad(const Scene & scene, LossReduction reduction, const ForwardOptions & opts = {}) const
  {
    Tape<T> tape;
    Session<T> s(tape, params_);
    Var<T> loss = scene_loss(s, layout_, cfg_, scene, reduction, opts);
    backprop(tape, loss);
    return LossGrad{static_cast<double>(loss.value()[0]), s.gradients()};
  }

  double loss(const Scene & scene, LossReduction reduction) const
  {
    Tape<T> tape;
    Session<T> s(tape, params_);
    return static_cast<double>(scene_loss(s, layout_, cfg_, scene, reduction).value()[0]);
  }

private:
  ModelConfig cfg_;
  ParameterStore<T> params_;
  ModelLayout layout_;
};

}  // namespace mart

#endif  // MART__MODEL_HPP_
