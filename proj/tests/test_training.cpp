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

#include "sfsr/gradcheck.hpp"
#include "sfsr/training.hpp"
#include "support/random.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace sfsr;
using sfsr::testing::random_tensor;

namespace {

std::vector<ImagePair> tiny_pairs(int n, Index hr_size = 16) {
  std::vector<ImagePair> pairs;
  for (int i = 0; i < n; ++i) pairs.push_back(make_pair(testing::synthetic_fundus(hr_size, 50 + i), 2, "p" + std::to_string(i)));
  return pairs;
}

TrainConfig quick_config(Index epochs) {
  TrainConfig cfg;
  cfg.batch = 2;
  cfg.epochs = epochs;
  cfg.patch_lr = 6;
  cfg.seed = 3;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("L1 loss") {
  const auto t = random_tensor<double>({2, 3, 4, 4}, 1);
  CHECK(l1_loss(t, t) == 0.0);
  Tensor<double> p = t;
  p.array() += 0.25;
  CHECK(l1_loss(p, t) == doctest::Approx(0.25).epsilon(1e-15));
  const auto g = l1_loss_backward(p, t);
  CHECK((g.array() == 1.0 / 96.0).all());

  auto pred = random_tensor<double>({1, 2, 3, 3}, 2);
  const auto target = random_tensor<double>({1, 2, 3, 3}, 3);
  const auto report = check_gradients([&] { return l1_loss(pred, target); }, {{"pred", &pred}},
                                      {l1_loss_backward(pred, target)});
  CHECK(report.max_rel_error() < 1e-6);
}

TEST_CASE("Adam") {
  AdamConfig cfg;
  Tensor<double> w({1}, 1.0);
  AdamState<double> state{{Tensor<double>({1})}, {Tensor<double>({1})}, 0};

  const Tensor<double> zero({1});
  adam_step<double>({&w}, {&zero}, state, cfg);
  CHECK(w[0] == 1.0);
  CHECK(state.m[0][0] == 0.0);
  CHECK(state.v[0][0] == 0.0);

  // t = 1 with g = 5: m_hat = 5, v_hat = 25, w = 1 - 2e-4 * 5 / (5 + 1e-8).
  state = {{Tensor<double>({1})}, {Tensor<double>({1})}, 0};
  const Tensor<double> g({1}, 5.0);
  adam_step<double>({&w}, {&g}, state, cfg);
  CHECK(w[0] == doctest::Approx(0.9998).epsilon(1e-9));

  // Second step by hand.
  const double m1 = 0.1 * 5.0, v1 = 0.001 * 25.0;
  const double m2 = 0.9 * m1 + 0.1 * 5.0, v2 = 0.999 * v1 + 0.001 * 25.0;
  const double mh = m2 / (1.0 - 0.81), vh = v2 / (1.0 - 0.999 * 0.999);
  const double expected = w[0] - 2e-4 * mh / (std::sqrt(vh) + 1e-8);
  adam_step<double>({&w}, {&g}, state, cfg);
  CHECK(std::abs(w[0] - expected) < 1e-12);
  CHECK(state.step == 2);

  const Tensor<double> nan({1}, std::nan(""));
  CHECK_THROWS_AS(adam_step<double>({&w}, {&nan}, state, cfg), NumericError);
  const Tensor<double> wrong({2});
  CHECK_THROWS_AS(adam_step<double>({&w}, {&wrong}, state, cfg), ShapeError);
}

TEST_CASE("steps per epoch") {
  CHECK(steps_per_epoch(320, 2) == 160);
  CHECK(steps_per_epoch(5, 2) == 3);
  CHECK(steps_per_epoch(1, 4) == 1);
}

TEST_CASE("training config validation") {
  auto cfg = quick_config(1);
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = quick_config(-1);
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = quick_config(1);
  cfg.adam.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("zero epochs leaves the initialization in the checkpoint") {
  testing::TempDir dir;
  auto cfg = quick_config(0);
  cfg.checkpoint_path = dir / "ck.sfsr";
  const auto model = build<float>(ModelConfig::tiny(), 4);
  auto session = TrainSession::start(model);
  CHECK(train(session, tiny_pairs(2), {}, cfg).empty());
  const auto restored = session_from_checkpoint(read_checkpoint(cfg.checkpoint_path));
  CHECK(restored.step == 0);
  CHECK(encode_checkpoint(checkpoint_from_model(restored.model)) == encode_checkpoint(checkpoint_from_model(model)));
}

TEST_CASE("loss on a fixed batch falls during the first steps") {
  const auto pairs = tiny_pairs(2);
  auto cfg = quick_config(10);  // one step per epoch
  cfg.patch_lr = 8;             // whole images, so the batch is fixed
  auto session = TrainSession::start(build<float>(ModelConfig::tiny(), 5));
  const double initial = batch_loss(session.model, pairs);
  const auto log = train(session, pairs, {}, cfg);
  REQUIRE(log.size() == 10);
  std::vector<double> losses{initial};
  for (const auto& r : log) losses.push_back(r.loss);
  losses.push_back(batch_loss(session.model, pairs));
  const double early = *std::min_element(losses.begin(), losses.begin() + 5);
  const double late = *std::min_element(losses.begin() + 5, losses.end());
  CHECK(late < early);
  CHECK(losses.back() < initial);
}

TEST_CASE("resume reproduces the uninterrupted run") {
  testing::TempDir dir;
  const auto pairs = tiny_pairs(3);
  const auto val = tiny_pairs(1);
  auto cfg = quick_config(3);
  cfg.eval_every = 2;

  auto full = TrainSession::start(build<float>(ModelConfig::tiny(), 6));
  cfg.log_path = dir / "full.csv";
  const auto full_log = train(full, pairs, val, cfg);
  REQUIRE(full_log.size() == 6);

  auto first = TrainSession::start(build<float>(ModelConfig::tiny(), 6));
  cfg.log_path = dir / "split.csv";
  const auto head = train(first, pairs, val, cfg, 4);
  CHECK(head.size() == 4);
  const auto bytes = encode_checkpoint(checkpoint_from_session(first, cfg));
  auto resumed = session_from_checkpoint(decode_checkpoint(bytes));
  CHECK(resumed.step == 4);
  const auto tail = train(resumed, pairs, val, cfg);
  REQUIRE(tail.size() == 2);

  for (std::size_t i = 0; i < 6; ++i) {
    const auto& r = i < 4 ? head[i] : tail[i - 4];
    CHECK(r.step == full_log[i].step);
    CHECK(r.loss == full_log[i].loss);
    CHECK(r.psnr == full_log[i].psnr);
  }
  CHECK(encode_checkpoint(checkpoint_from_session(resumed, cfg)) ==
        encode_checkpoint(checkpoint_from_session(full, cfg)));
  CHECK(slurp(dir / "split.csv") == slurp(dir / "full.csv"));
  CHECK(slurp(dir / "full.csv").rfind("step,loss,psnr,ssim\n1,", 0) == 0);
}

TEST_CASE("evaluation") {
  const auto pairs = tiny_pairs(3, 24);
  const auto report = evaluate([](const Tensor<float>& lr) { return bicubic_upscale(lr, 2); }, pairs);
  REQUIRE(report.images.size() == 3);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto up = bicubic_upscale(pairs[i].lr, 2);
    CHECK(report.images[i].psnr == psnr(up, pairs[i].hr));
    CHECK(report.images[i].ssim == ssim(up, pairs[i].hr));
    sum += report.images[i].psnr;
  }
  CHECK(std::abs(report.mean_psnr - sum / 3.0) < 1e-9);
  CHECK_THROWS_AS(evaluate([](const Tensor<float>& lr) { return lr; }, {}), ValueError);

  const auto model = build<float>(ModelConfig::tiny(), 7);
  const auto sr = upscale_image(model, pairs[0].lr);
  CHECK(sr.shape() == pairs[0].hr.shape());
  CHECK((sr.array() >= 0.0f).all());
  CHECK((sr.array() <= 1.0f).all());
}
