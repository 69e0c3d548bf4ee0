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

#ifndef MART__TRAIN_HPP_
#define MART__TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mart/checkpoint.hpp"
#include "mart/config.hpp"
#include "mart/errors.hpp"
#include "mart/model.hpp"
#include "mart/scene.hpp"

namespace mart
{

/// Adam with bias correction, all state in single precision.
class Adam
{
public:
  static constexpr float beta1 = 0.9f;
  static constexpr float beta2 = 0.999f;
  static constexpr float epsilon = 1e-8f;

  explicit Adam(const ParameterStore<float> & params)
  {
    state_.m = zero_gradients(params);
    state_.v = zero_gradients(params);
  }

  explicit Adam(OptimizerState state) : state_(std::move(state)) {}

  const OptimizerState & state() const noexcept { return state_; }
  OptimizerState & state() noexcept { return state_; }

  void step(ParameterStore<float> & params, const Gradients<float> & grads, float lr)
  {
    ++state_.step;
    const auto t = static_cast<float>(state_.step);
    const float c1 = 1.0f - std::pow(beta1, t);
    const float c2 = 1.0f - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.count(); ++i) {
      auto p = params.value(i).data();
      auto g = grads[i].data();
      auto m = state_.m[i].data();
      auto v = state_.v[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        m[j] = beta1 * m[j] + (1.0f - beta1) * g[j];
        v[j] = beta2 * v[j] + (1.0f - beta2) * g[j] * g[j];
        const float mhat = m[j] / c1;
        const float vhat = v[j] / c2;
        p[j] -= lr * mhat / (std::sqrt(vhat) + epsilon);
      }
    }
  }

private:
  OptimizerState state_;
};

struct EpochLog
{
  int epoch{0};
  long step{0};  // optimizer steps taken when the epoch ended
  double loss{0.0};  // mean scene loss over the epoch
  double lr{0.0};
};

inline nlohmann::json to_json(const EpochLog & e)
{
  return {{"epoch", e.epoch}, {"step", e.step}, {"loss", e.loss}, {"lr", e.lr}};
}

/// Step decay: lr * factor^floor(epoch / every).
inline double learning_rate(const TrainConfig & cfg, int epoch)
{
  return cfg.lr * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

/// Scene order for one epoch; a pure function of (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch)
{
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// Rejects scene lists the model cannot be trained or scored on.
inline void check_scenes(const std::vector<Scene> & scenes, const ModelConfig & cfg, bool need_labels)
{
  for (const auto & s : scenes) {
    s.validate();
    if (need_labels && !s.labeled()) {
      throw DataError("scene " + s.id + " is unlabeled");
    }
    if (s.t_p() != static_cast<std::size_t>(cfg.t_p) ||
        (s.labeled() && s.t_f() != static_cast<std::size_t>(cfg.t_f))) {
      throw ConfigError("scene " + s.id + " horizons do not match the model configuration");
    }
  }
}

struct BatchResult
{
  double loss{0.0};  // mean over the batch
  Gradients<float> grads;  // mean over the batch
};

/**
 * @brief Mean loss and gradient over a list of scenes.
 *
 * Scenes are split across `threads` workers, each with its own tape; the
 * per-scene results are then summed in scene order so the outcome does not
 * depend on the thread count.
 */
inline BatchResult batch_gradient(const MartModel<float> & model, const std::vector<const Scene *> & batch,
                                  LossReduction reduction, int threads)
{
  const std::size_t n = batch.size();
  std::vector<MartModel<float>::LossGrad> results(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = model.loss_and_grad(*batch[i], reduction);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) results[i] = model.loss_and_grad(*batch[i], reduction);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto & t : pool) t.join();
    for (auto & e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  BatchResult out;
  out.grads = zero_gradients(model.params());
  for (std::size_t i = 0; i < n; ++i) {
    out.loss += results[i].loss;
    for (std::size_t p = 0; p < out.grads.size(); ++p) {
      auto dst = out.grads[p].data();
      auto src = results[i].grads[p].data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  const float inv = 1.0f / static_cast<float>(n);
  for (auto & g : out.grads) {
    for (auto & x : g.data()) x *= inv;
  }
  out.loss /= static_cast<double>(n);
  return out;
}

struct TrainResult
{
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/**
 * @brief Adam training over shuffled scene-list batches.
 *
 * Passing a checkpoint resumes from its parameters and optimizer state; the
 * run continues at the checkpoint's epoch. `on_epoch` receives each log
 * entry as soon as the epoch ends.
 */
inline TrainResult train(const TrainConfig & cfg, const std::vector<Scene> & scenes,
                         const std::optional<Checkpoint> & resume = std::nullopt,
                         const std::function<void(const EpochLog &)> & on_epoch = {})
{
  cfg.validate();
  if (scenes.empty()) throw DataError("no training scenes");
  check_scenes(scenes, cfg.model, true);

  std::optional<MartModel<float>> model;
  std::optional<Adam> adam;
  int first_epoch = 0;
  if (resume) {
    model.emplace(cfg.model, resume->params);
    if (resume->optimizer) {
      adam.emplace(*resume->optimizer);
      first_epoch = resume->optimizer->epoch;
    } else {
      adam.emplace(model->params());
    }
  } else {
    model.emplace(cfg.model, cfg.seed);
    adam.emplace(model->params());
  }

  TrainResult result;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  int epoch = first_epoch;
  for (; epoch < cfg.epochs; ++epoch) {
    if (cfg.max_steps > 0 && adam->state().step >= cfg.max_steps) break;
    const double lr = learning_rate(cfg, epoch);
    const std::vector<std::size_t> order = epoch_order(scenes.size(), cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      if (cfg.max_steps > 0 && adam->state().step >= cfg.max_steps) break;
      std::vector<const Scene *> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i) batch.push_back(&scenes[order[i]]);
      BatchResult br = batch_gradient(*model, batch, cfg.loss_reduction, cfg.threads);
      adam->step(model->params(), br.grads, static_cast<float>(lr));
      loss_sum += br.loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochLog e{epoch, adam->state().step, loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1)), lr};
    result.log.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  adam->state().epoch = epoch;
  result.checkpoint.config = cfg;
  result.checkpoint.params = model->params();
  result.checkpoint.optimizer = adam->state();
  return result;
}

}  // namespace mart

#endif  // MART__TRAIN_HPP_
