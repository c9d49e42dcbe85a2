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

#include "sfsr/training.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace sfsr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (batch < 1) throw ValueError("batch must be >= 1");
  if (epochs < 0) throw ValueError("epochs must be >= 0");
  if (patch_lr < 1) throw ValueError("patch_lr must be >= 1");
  if (eval_every < 0) throw ValueError("eval_every must be >= 0");
  if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw ValueError("invalid Adam hyperparameters");
  }
}

TrainSession TrainSession::start(Model<float> model) {
  TrainSession s{std::move(model), {}, 0};
  s.adam = AdamState<float>::zeros_for(named_parameters(s.model.params));
  return s;
}

Index steps_per_epoch(std::size_t train_size, Index batch) {
  return (static_cast<Index>(train_size) + batch - 1) / batch;
}

namespace {

// Independent streams keyed by (seed, purpose, counter).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t counter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::int64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = stream(seed, 1, static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Tensor<float> stack(const std::vector<const Tensor<float>*>& images) {
  const Shape& s = images.front()->shape();
  Tensor<float> out({static_cast<Index>(images.size()), s[0], s[1], s[2]});
  const Index per = images.front()->size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i]->require_same_shape(*images.front(), "batch stack");
    out.array().segment(static_cast<Index>(i) * per, per) = images[i]->array();
  }
  return out;
}

std::string format_row(const LogRow& r) {
  char buf[128];
  if (r.psnr && r.ssim) {
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%.6f,%.8f", static_cast<long long>(r.step), r.loss,
                  capped_psnr(*r.psnr), *r.ssim);
  } else {
    std::snprintf(buf, sizeof buf, "%lld,%.9g,,", static_cast<long long>(r.step), r.loss);
  }
  return buf;
}

void append_log(const fs::path& path, const LogRow& row) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot append to log " + path.string());
  if (fresh) f << "step,loss,psnr,ssim\n";
  f << format_row(row) << '\n';
}

}  // namespace

double batch_loss(const Model<float>& model, const std::vector<ImagePair>& pairs) {
  std::vector<const Tensor<float>*> lr, hr;
  for (const auto& p : pairs) {
    lr.push_back(&p.lr);
    hr.push_back(&p.hr);
  }
  return l1_loss(forward(model, stack(lr), Mode::Training), stack(hr));
}

std::vector<LogRow> train(TrainSession& session, const std::vector<ImagePair>& train_pairs,
                          const std::vector<ImagePair>& val_pairs, const TrainConfig& cfg,
                          std::optional<std::int64_t> stop_after) {
  cfg.validate();
  if (train_pairs.empty()) throw ValueError("training split is empty");
  Index patch = cfg.patch_lr;
  for (const auto& p : train_pairs) {
    if (p.scale != session.model.config.scale) throw ValueError("pair '" + p.id + "' has the wrong scale");
    patch = std::min({patch, p.lr.dim(1), p.lr.dim(2)});
  }

  const Index per_epoch = steps_per_epoch(train_pairs.size(), cfg.batch);
  const std::int64_t total = cfg.epochs * per_epoch;
  const std::int64_t end = stop_after ? std::min(total, *stop_after) : total;
  auto params = named_parameters(session.model.params);
  std::vector<Tensor<float>*> param_ptrs;
  for (auto& [name, t] : params) param_ptrs.push_back(t);

  std::vector<LogRow> log;
  const auto write_ckpt = [&] {
    if (!cfg.checkpoint_path.empty()) write_checkpoint(cfg.checkpoint_path, checkpoint_from_session(session, cfg));
  };

  std::vector<std::size_t> order;
  std::int64_t order_epoch = -1;
  while (session.step < end) {
    const std::int64_t step = session.step;
    const std::int64_t epoch = step / per_epoch;
    const std::int64_t slot = step % per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(train_pairs.size(), cfg.seed, epoch);
      order_epoch = epoch;
    }
    auto rng = stream(cfg.seed, 2, static_cast<std::uint64_t>(step));
    std::vector<ImagePair> batch;
    const auto first = static_cast<std::size_t>(slot * cfg.batch);
    const auto last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch));
    for (std::size_t i = first; i < last; ++i) batch.push_back(sample_patch(train_pairs[order[i]], patch, rng));

    std::vector<const Tensor<float>*> lr, hr;
    for (const auto& p : batch) {
      lr.push_back(&p.lr);
      hr.push_back(&p.hr);
    }
    const Tensor<float> input = stack(lr);
    const Tensor<float> target = stack(hr);
    ModelCache<float> cache;
    const Tensor<float> pred = forward(session.model, input, Mode::Training, &cache);
    const double loss = l1_loss(pred, target);
    if (!std::isfinite(loss)) throw NumericError("non-finite loss at step " + std::to_string(step));
    ModelParams<float> grads = backward(session.model, cache, l1_loss_backward(pred, target));
    std::vector<const Tensor<float>*> grad_ptrs;
    for (auto& [name, t] : named_parameters(grads)) grad_ptrs.push_back(t);
    adam_step(param_ptrs, grad_ptrs, session.adam, cfg.adam);
    session.step += 1;

    LogRow row{session.step, loss, std::nullopt, std::nullopt};
    const bool periodic = cfg.eval_every > 0 && session.step % cfg.eval_every == 0;
    if (!val_pairs.empty() && (periodic || session.step == total)) {
      const MetricReport r = evaluate(session.model, val_pairs);
      row.psnr = r.mean_psnr;
      row.ssim = r.mean_ssim;
    }
    if (!cfg.log_path.empty()) append_log(cfg.log_path, row);
    log.push_back(row);
    if (periodic) write_ckpt();
  }
  if (session.step == total) write_ckpt();
  return log;
}

Checkpoint checkpoint_from_session(const TrainSession& session, const TrainConfig& cfg) {
  Checkpoint ckpt = checkpoint_from_model(session.model);
  ckpt.meta["train"] = {{"step", session.step},
                        {"seed", cfg.seed},
                        {"adam", {{"lr", cfg.adam.lr},
                                  {"beta1", cfg.adam.beta1},
                                  {"beta2", cfg.adam.beta2},
                                  {"eps", cfg.adam.eps},
                                  {"t", session.adam.step}}}};
  const auto params = named_parameters(session.model.params);
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.records.emplace_back("adam.m." + params[i].first, session.adam.m[i]);
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.records.emplace_back("adam.v." + params[i].first, session.adam.v[i]);
  return ckpt;
}

TrainSession session_from_checkpoint(const Checkpoint& ckpt) {
  TrainSession session = TrainSession::start(model_from_checkpoint(ckpt));
  if (!ckpt.meta.contains("train")) return session;
  const auto& tr = ckpt.meta["train"];
  session.step = tr.value("step", std::int64_t{0});
  session.adam.step = tr.contains("adam") ? tr["adam"].value("t", std::int64_t{0}) : 0;
  const auto params = named_parameters(session.model.params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<float>* m = ckpt.find("adam.m." + params[i].first);
    const Tensor<float>* v = ckpt.find("adam.v." + params[i].first);
    if (!m || !v) throw CheckpointError("checkpoint is missing optimizer state for '" + params[i].first + "'");
    session.adam.m[i] = *m;
    session.adam.v[i] = *v;
  }
  return session;
}

Tensor<float> upscale_image(const Model<float>& model, const Tensor<float>& lr) {
  if (lr.rank() != 3) throw ShapeError("upscale_image expects [3,H,W]");
  const Tensor<float> out = forward(model, lr.reshaped({1, lr.dim(0), lr.dim(1), lr.dim(2)}), Mode::Inference);
  return out.reshaped({out.dim(1), out.dim(2), out.dim(3)});
}

MetricReport evaluate(const Upscaler& upscale, const std::vector<ImagePair>& pairs) {
  if (pairs.empty()) throw ValueError("evaluate: no image pairs");
  std::vector<ImageScore> scores;
  for (const auto& p : pairs) {
    const Tensor<float> pred = clamp(upscale(p.lr), 0.0f, 1.0f);
    scores.push_back({p.id, psnr(pred, p.hr), ssim(pred, p.hr)});
  }
  return summarize(std::move(scores));
}

MetricReport evaluate(const Model<float>& model, const std::vector<ImagePair>& pairs) {
  return evaluate([&](const Tensor<float>& lr) { return upscale_image(model, lr); }, pairs);
}

}  // namespace sfsr
