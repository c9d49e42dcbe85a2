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

#include "sfsr/model.hpp"
#include "sfsr/model_check.hpp"
#include "support/random.hpp"

#include <doctest.h>

#include <set>

using namespace sfsr;
using sfsr::testing::random_tensor;

namespace {

Index stored_parameters(const ModelConfig& cfg) {
  Index total = 0;
  for (const auto& [name, t] : named_parameters(zero_parameters<float>(cfg))) total += t->size();
  return total;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  auto c = ModelConfig::tiny();
  c.scale = 3;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ModelConfig::tiny();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ModelConfig::tiny();
  c.counts.sca = 2;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c = ModelConfig::tiny();
  c.counts.dca = 0;
  CHECK_THROWS_AS(c.validate(), ValueError);
}

TEST_CASE("build is deterministic and follows the init rules") {
  const auto cfg = ModelConfig::tiny();
  const auto a = build<float>(cfg, 7);
  const auto b = build<float>(cfg, 7);
  const auto c = build<float>(cfg, 8);
  const auto pa = named_parameters(a.params), pb = named_parameters(b.params), pc = named_parameters(c.params);
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  std::set<std::string> names;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto& [name, t] = pa[i];
    CHECK(names.insert(name).second);
    CHECK(*t == *pb[i].second);
    any_diff = any_diff || !(*t == *pc[i].second);
    const auto ends = [&](const char* s) { return name.size() >= std::strlen(s) && name.ends_with(s); };
    if (ends(".bias") || ends(".beta")) {
      CHECK((t->array() == 0.0f).all());
    } else if (ends(".gamma")) {
      CHECK((t->array() == 1.0f).all());
    } else {
      CHECK(t->array().abs().maxCoeff() <= 2.0f * static_cast<float>(kInitStd));
      CHECK(t->array().abs().maxCoeff() > 0.0f);
    }
  }
  CHECK(any_diff);
  CHECK(names.count("irstb.0.stlc.1.attn.relative_bias") == 1);
  CHECK(names.count("irstb.0.sca.dilated.weight") == 1);
  CHECK(names.count("dca.0.depthwise.weight") == 1);
  CHECK(names.count("embed.norm.gamma") == 1);
}

TEST_CASE("init draws have the requested spread") {
  const auto m = build<double>(ModelConfig{}, 1);
  double sum = 0.0, sq = 0.0;
  Index n = 0;
  for (const auto& [name, t] : named_parameters(m.params)) {
    if (!name.ends_with(".weight")) continue;
    sum += t->array().sum();
    sq += t->array().square().sum();
    n += t->size();
  }
  // Normal truncated at 2 sigma has std 0.8796 sigma.
  CHECK(sum / static_cast<double>(n) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(std::sqrt(sq / static_cast<double>(n)) == doctest::Approx(0.8796 * kInitStd).epsilon(0.01));
}

TEST_CASE("forward shapes and padding") {
  const auto model = build<float>(ModelConfig::tiny(), 3);
  CHECK(forward(model, random_tensor<float>({1, 3, 32, 32}, 1, 0.0, 1.0)).shape() == Shape{1, 3, 64, 64});
  CHECK(forward(model, random_tensor<float>({1, 3, 33, 33}, 2, 0.0, 1.0)).shape() == Shape{1, 3, 66, 66});
  CHECK(forward(model, random_tensor<float>({2, 3, 5, 11}, 3, 0.0, 1.0)).shape() == Shape{2, 3, 10, 22});
  const auto x4 = build<float>(ModelConfig::tiny(4), 3);
  CHECK(forward(x4, random_tensor<float>({1, 3, 8, 8}, 4, 0.0, 1.0)).shape() == Shape{1, 3, 32, 32});
  CHECK_THROWS_AS(forward(model, Tensor<float>({1, 1, 8, 8})), ShapeError);
}

TEST_CASE("zero model outputs zero") {
  const Model<float> zero{ModelConfig::tiny(), zero_parameters<float>(ModelConfig::tiny())};
  const auto out = forward(zero, random_tensor<float>({1, 3, 9, 7}, 5, 0.0, 1.0), Mode::Training);
  CHECK((out.array() == 0.0f).all());
}

TEST_CASE("forward is deterministic and inference clamps") {
  auto model = build<float>(ModelConfig::tiny(), 4);
  const auto x = random_tensor<float>({1, 3, 12, 12}, 6, 0.0, 1.0);
  CHECK(forward(model, x) == forward(model, x));
  model.params.rec.bias.array() = 3.0f;
  CHECK((forward(model, x, Mode::Inference).array() == 1.0f).all());
  CHECK((forward(model, x, Mode::Training).array() > 1.0f).all());
  Tensor<float> bad = x;
  bad[5] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(forward(model, bad), NumericError);
}

TEST_CASE("parameter counts") {
  // Tiny: C=16, h=32, w=4, two heads, r=2.
  //   H_LF   3*3*3*16 + 16                                    = 448
  //   DCA    (16 + 16) + (16*16 + 16)                          = 304
  //   embed  norm                                               = 32
  //   STLc   norms 2*32, qkv 48*16 + 48, proj 16*16 + 16,
  //          bias table 7*7*2, MLP 16*32 + 32 + 32*16 + 16      = 2322, two layers = 4644
  //   SCA    (16*16 + 16) + (9*16*16 + 16) + (16 + 16)         = 2624
  //   H_REC  16*12 + 12                                         = 204
  const auto tiny = ModelConfig::tiny();
  const auto b = param_count(tiny);
  CHECK(b.h_lf == 448);
  CHECK(b.dca == 304);
  CHECK(b.embed_norm == 32);
  CHECK(b.irstb() == 4644 + 2624);
  CHECK(b.h_rec == 204);
  CHECK(b.total() == 8256);
  CHECK(stored_parameters(tiny) == 8256);

  const ModelConfig full;
  CHECK(param_count(full).h_lf == 1680);
  CHECK(conv_mlp_param_count(60, 120) == 14580);
  CHECK(param_count(full).total() == stored_parameters(full));

  auto doubled = full;
  doubled.counts.irstb = 8;
  doubled.counts.sca = 8;  // every iRSTB keeps its SCA branch
  CHECK(param_count(doubled).irstb() == 2 * param_count(full).irstb());
}

TEST_CASE("backward on a small model matches finite differences") {
  auto cfg = ModelConfig::tiny();
  cfg.counts = {1, 2, 1, 2};
  const auto report = check_model_gradients(cfg, {.seed = 3, .input_size = 6});
  CHECK(report.entries.size() == named_parameters(zero_parameters<double>(cfg)).size());
  CHECK(report.max_rel_error() < 1e-4);
}

TEST_CASE("corrupted adjoint is caught and named") {
  auto cfg = ModelConfig::tiny();
  ModelCheckOptions opts;
  opts.input_size = 4;
  opts.corrupt_param = "dca.0.pointwise.weight";
  const auto report = check_model_gradients(cfg, opts);
  CHECK_FALSE(report.passed(1e-4));
  CHECK(report.worst().name == "dca.0.pointwise.weight");
  opts.corrupt_param = "no.such.param";
  CHECK_THROWS_AS(check_model_gradients(cfg, opts), ValueError);
}
