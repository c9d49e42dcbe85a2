/*
 * Copyright (c) 2026, The sfsr Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "sfsr/checkpoint.hpp"
#include "sfsr/data.hpp"
#include "sfsr/metrics.hpp"
#include "sfsr/model.hpp"
#include "sfsr/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace sfsr {

// --- L1 objective ---------------------------------------------------------------

/// Mean absolute difference over all elements.
template <typename Scalar>
Scalar l1_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  pred.require_same_shape(target, "l1_loss");
  return (pred.array() - target.array()).abs().mean();
}

/// sign(pred - target) / n, zero where the residual is exactly zero.
template <typename Scalar>
Tensor<Scalar> l1_loss_backward(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  pred.require_same_shape(target, "l1_loss_backward");
  Tensor<Scalar> g(pred.shape());
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(pred.size());
  g.array() = (pred.array() - target.array()).sign() * inv_n;
  return g;
}

// --- Adam -----------------------------------------------------------------------------

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;
  std::int64_t step = 0;

  template <typename Params>
  static AdamState zeros_for(const Params& params) {
    AdamState s;
    for (const auto& [name, t] : params) {
      s.m.push_back(Tensor<Scalar>::zeros_like(*t));
      s.v.push_back(Tensor<Scalar>::zeros_like(*t));
    }
    return s;
  }
};

/// One bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(const std::vector<Tensor<Scalar>*>& params, const std::vector<const Tensor<Scalar>*>& grads,
               AdamState<Scalar>& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw ShapeError("adam_step: parameter/gradient/state counts differ");
  }
  for (const auto* g : grads)
    if (!g->all_finite()) throw NumericError("adam_step: non-finite gradient");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->require_same_shape(*grads[i], "adam_step");
    auto& m = state.m[i].array();
    auto& v = state.v[i].array();
    const auto& g = grads[i]->array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    const auto m_hat = m / static_cast<Scalar>(bc1);
    const auto v_hat = v / static_cast<Scalar>(bc2);
    params[i]->array() -= static_cast<Scalar>(cfg.lr) * m_hat / (v_hat.sqrt() + static_cast<Scalar>(cfg.eps));
  }
}

// --- Training loop ----------------------------------------------------------------------

struct TrainConfig {
  Index batch = 2;
  Index epochs = 200;
  Index patch_lr = 64;
  std::uint64_t seed = 0;
  Index eval_every = 0;  // 0: validate only at the end
  AdamConfig adam;
  std::filesystem::path checkpoint_path;  // empty: no checkpoint files
  std::filesystem::path log_path;         // empty: no CSV log

  void validate() const;
};

struct LogRow {
  std::int64_t step = 0;
  double loss = 0.0;
  std::optional<double> psnr;
  std::optional<double> ssim;
};

/// Everything needed to continue training bit-identically.
struct TrainSession {
  Model<float> model;
  AdamState<float> adam;
  std::int64_t step = 0;  // optimizer steps completed

  static TrainSession start(Model<float> model);
};

Index steps_per_epoch(std::size_t train_size, Index batch);

/// Runs optimizer steps from `session.step` up to epochs * steps_per_epoch.
///
/// Batch composition and patch offsets are derived from (seed, epoch) and
/// (seed, step) alone, so a resumed session reproduces the uninterrupted run.
/// `stop_after` (when set) halts after that many total steps without writing
/// the end-of-run checkpoint; used to simulate interruption.
std::vector<LogRow> train(TrainSession& session, const std::vector<ImagePair>& train_pairs,
                          const std::vector<ImagePair>& val_pairs, const TrainConfig& cfg,
                          std::optional<std::int64_t> stop_after = std::nullopt);

/// Loss of one batch without updating anything.
double batch_loss(const Model<float>& model, const std::vector<ImagePair>& pairs);

/// Checkpoint with model, optimizer moments and the step counter.
Checkpoint checkpoint_from_session(const TrainSession& session, const TrainConfig& cfg);
TrainSession session_from_checkpoint(const Checkpoint& ckpt);

// --- Evaluation -------------------------------------------------------------------------------

using Upscaler = std::function<Tensor<float>(const Tensor<float>& lr)>;

/// Scores upscale(lr) against hr for every pair.
MetricReport evaluate(const Upscaler& upscale, const std::vector<ImagePair>& pairs);
MetricReport evaluate(const Model<float>& model, const std::vector<ImagePair>& pairs);

/// Inference on one [3,h,w] image (clamped).
Tensor<float> upscale_image(const Model<float>& model, const Tensor<float>& lr);

}  // namespace sfsr
