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

#include "sfsr/cli.hpp"
#include "sfsr/config.hpp"
#include "sfsr/data.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace sfsr;
using sfsr::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

// Six 32x32 fundus-like HR images under <root>/demo/hr.
DatasetLayout make_dataset(const TempDir& dir, const std::string& name = "demo", int n = 6) {
  const DatasetLayout layout{dir.path(), name};
  std::filesystem::create_directories(layout.hr_dir());
  for (int i = 0; i < n; ++i) save_image(testing::synthetic_fundus(32, 70 + i), layout.hr_path("f" + std::to_string(i)));
  return layout;
}

std::string tiny_config(const std::filesystem::path& root, const std::filesystem::path& out) {
  return "# tiny run\n"
         "scale = 2\nembed_channels = 16\nwindow = 4\nheads = 2\n"
         "n_irstb = 1\nn_dca = 1\nn_sca = 1\nn_stlc = 2\n"
         "batch = 2\nepochs = 1\npatch_lr = 8\nseed = 1\nlr = 0.0002\n"
         "hr_size = 32\n"
         "root = " + root.string() + "\ndataset = demo\nout_dir = " + out.string() + "\n";
}

}  // namespace

TEST_CASE("config files") {
  const auto cfg = parse_run_config("scale = 4\n# comment\nlr = 0.001  # trailing\n\nwindow=4\n");
  CHECK(cfg.model.scale == 4);
  CHECK(cfg.model.window == 4);
  CHECK(cfg.train.adam.lr == 0.001);
  CHECK_THROWS_WITH_AS(parse_run_config("scale = 2\nbogus = 1\n"), doctest::Contains("line 2"), ValueError);
  CHECK_THROWS_AS(parse_run_config("scale = two\n"), ValueError);
  CHECK_THROWS_AS(parse_run_config("scale 2\n"), ValueError);

  RunConfig r;
  apply_overrides(r, {"epochs=3", "dataset=x"});
  CHECK(r.train.epochs == 3);
  CHECK(r.dataset == "x");
  CHECK_THROWS_AS(apply_overrides(r, {"epochs"}), ValueError);

  // Formatting then parsing gives the same configuration back.
  r.model.counts.sca = 2;
  r.train.adam.beta2 = 0.99;
  const auto back = parse_run_config(format_run_config(r));
  CHECK(back.model == r.model);
  CHECK(back.train.adam.beta2 == 0.99);
  CHECK(back.dataset == "x");
  CHECK(run_config_keys().size() == 24);
}

TEST_CASE("usage errors") {
  auto r = run({});
  CHECK(r.code == kExitValidation);
  r = run({"frobnicate"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.rfind("error: kind=usage", 0) == 0);
  r = run({"split"});
  CHECK(r.code == kExitValidation);
  r = run({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("degrade") != std::string::npos);
}

TEST_CASE("degrade") {
  TempDir dir;
  const auto layout = make_dataset(dir);
  const std::string root = dir.path().string();

  auto r = run({"degrade", "--root", root, "--dataset", "demo", "--scale", "3"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("kind=validation") != std::string::npos);

  r = run({"degrade", "--root", root, "--dataset", "demo", "--scale", "2", "--hr-size", "32"});
  REQUIRE(r.code == kExitOk);
  CHECK(load_image(layout.lr_path("f0", 2)).shape() == Shape{3, 16, 16});
  const auto manifest = nlohmann::json::parse(slurp(layout.lr_dir(2) / "manifest.json"));
  CHECK(manifest["images"].size() == 6);
  CHECK(manifest["images"][0]["lr_width"] == 16);
  const std::string first = slurp(layout.lr_path("f3", 2));
  const std::string first_manifest = slurp(layout.lr_dir(2) / "manifest.json");

  r = run({"degrade", "--root", root, "--dataset", "demo", "--scale", "2", "--hr-size", "32"});
  CHECK(r.code == kExitOk);
  CHECK(slurp(layout.lr_path("f3", 2)) == first);
  CHECK(slurp(layout.lr_dir(2) / "manifest.json") == first_manifest);

  // One unreadable image: reported by id, the others still written.
  write_text(layout.hr_path("zz"), "broken");
  r = run({"degrade", "--root", root, "--dataset", "demo", "--scale", "4", "--hr-size", "32"});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("id=zz") != std::string::npos);
  CHECK(std::filesystem::exists(layout.lr_path("f5", 4)));

  std::filesystem::create_directories(dir / "empty" / "hr");
  r = run({"degrade", "--root", root, "--dataset", "empty", "--scale", "2"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("no images") != std::string::npos);
}

TEST_CASE("split") {
  TempDir dir;
  const auto layout = make_dataset(dir, "demo", 10);
  setenv("SFSR_DATA_ROOT", dir.path().c_str(), 1);
  auto r = run({"split", "--dataset", "demo", "--seed", "4"});
  unsetenv("SFSR_DATA_ROOT");
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("train=8 test=2") != std::string::npos);
  const auto plan = SplitPlan::from_json(nlohmann::json::parse(slurp(layout.split_path())));
  CHECK(plan.train.size() == 8);
  CHECK(plan.seed == 4);

  make_dataset(dir, "small", 4);
  r = run({"split", "--root", dir.path().string(), "--dataset", "small"});
  CHECK(r.code == kExitValidation);

  if (std::getenv("SFSR_DATA_ROOT") == nullptr) {
    r = run({"split", "--dataset", "demo"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("SFSR_DATA_ROOT") != std::string::npos);
  }
}

TEST_CASE("train, infer and eval") {
  TempDir dir;
  const auto layout = make_dataset(dir, "demo", 10);
  const std::string root = dir.path().string();
  REQUIRE(run({"degrade", "--root", root, "--dataset", "demo", "--scale", "2", "--hr-size", "32"}).code == 0);
  REQUIRE(run({"split", "--root", root, "--dataset", "demo", "--seed", "1"}).code == 0);
  const auto cfg_path = dir / "run.cfg";
  const auto out_dir = dir / "run";
  write_text(cfg_path, tiny_config(dir.path(), out_dir));

  auto r = run({"train", "--config", cfg_path.string(), "--fold", "7"});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("fold") != std::string::npos);
  r = run({"train", "--config", cfg_path.string(), "--set", "window=0"});
  CHECK(r.code == kExitValidation);
  r = run({"train", "--config", cfg_path.string(), "--set", "n_sca=2"});
  CHECK(r.code == kExitValidation);
  CHECK_FALSE(std::filesystem::exists(out_dir / "checkpoint.sfsr"));

  r = run({"train", "--config", cfg_path.string(), "--fold", "1"});
  REQUIRE(r.code == kExitOk);
  const auto ckpt = out_dir / "checkpoint.sfsr";
  CHECK(std::filesystem::exists(ckpt));
  const std::string log = slurp(out_dir / "log.csv");
  CHECK(log.rfind("step,loss,psnr,ssim\n", 0) == 0);
  // 8 training ids, fold 1 holds out 2 of them: 6 ids at batch 2.
  CHECK(std::count(log.begin(), log.end(), '\n') == 1 + 3);

  r = run({"train", "--config", cfg_path.string(), "--fold", "1", "--set", "epochs=2", "--resume"});
  REQUIRE(r.code == kExitOk);
  const std::string resumed_log = slurp(out_dir / "log.csv");
  CHECK(std::count(resumed_log.begin(), resumed_log.end(), '\n') == 1 + 6);
  CHECK(resumed_log.rfind(log.substr(0, log.find("\n3,")), 0) == 0);

  r = run({"infer", "--checkpoint", ckpt.string(), "--input", layout.lr_path("f0", 2).string(), "--output",
           (dir / "sr.png").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(load_image(dir / "sr.png").shape() == Shape{3, 32, 32});
  r = run({"infer", "--checkpoint", ckpt.string(), "--input", layout.lr_dir(2).string(), "--output",
           (dir / "sr").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(std::filesystem::exists(dir / "sr" / "f9.png"));
  r = run({"infer", "--checkpoint", (dir / "nope.sfsr").string(), "--input", "x.png", "--output", "y.png"});
  CHECK(r.code == kExitRuntime);

  r = run({"eval", "--root", root, "--dataset", "demo", "--scale", "2", "--hr-size", "32", "--csv",
           (dir / "table.csv").string(), "--per-image-csv", (dir / "scores.csv").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("Bicubic") != std::string::npos);
  CHECK(r.out.find("2X") != std::string::npos);
  CHECK(slurp(dir / "table.csv").find("Bicubic,demo,2,") != std::string::npos);
  const std::string scores = slurp(dir / "scores.csv");
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 1 + 2 + 2);

  r = run({"eval", "--checkpoint", ckpt.string(), "--root", root, "--dataset", "demo", "--hr-size", "32"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("SwinFSR") != std::string::npos);
  r = run({"eval", "--checkpoint", ckpt.string(), "--root", root, "--dataset", "demo", "--scale", "4"});
  CHECK(r.code == kExitValidation);
}

TEST_CASE("eval of exact reconstructions reports the PSNR cap") {
  TempDir dir;
  const DatasetLayout layout{dir.path(), "flat"};
  std::filesystem::create_directories(layout.hr_dir());
  for (int i = 0; i < 5; ++i) save_image(Tensor<float>({3, 16, 16}, 0.2f * static_cast<float>(i)), layout.hr_path("c" + std::to_string(i)));
  const std::string root = dir.path().string();
  REQUIRE(run({"degrade", "--root", root, "--dataset", "flat", "--scale", "2", "--hr-size", "0"}).code == 0);
  const auto r = run({"eval", "--root", root, "--dataset", "flat", "--scale", "2", "--hr-size", "0", "--split", "all"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("100.00") != std::string::npos);
}

TEST_CASE("param-count") {
  auto r = run({"param-count"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("H_LF                            1680") != std::string::npos);
  CHECK(r.out.find("tokens=4096 X_in=60 X_out=120 conv1d=14400 dense=58982400 ratio=4096") != std::string::npos);
  r = run({"param-count", "--tokens", "16", "--set", "embed_channels=30", "--set", "heads=3"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("ratio=16") != std::string::npos);
  CHECK(run({"param-count", "--set", "heads=7"}).code == kExitValidation);
}

TEST_CASE("gradcheck") {
  TempDir dir;
  write_text(dir / "tiny.cfg", "embed_channels = 16\nwindow = 4\nheads = 2\nn_irstb = 1\nn_dca = 1\n"
                               "n_sca = 1\nn_stlc = 2\ngradcheck_size = 4\n");
  const std::string cfg = (dir / "tiny.cfg").string();
  auto r = run({"gradcheck", "--config", cfg});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
  r = run({"gradcheck", "--config", cfg, "--corrupt-adjoint", "irstb.0.stlc.1.mlp.fc2.weight"});
  CHECK(r.code == kExitRuntime);
  CHECK(r.out.find("worst: irstb.0.stlc.1.mlp.fc2.weight") != std::string::npos);
  CHECK(r.out.find("FAIL") != std::string::npos);
  r = run({"gradcheck", "--config", (dir / "missing.cfg").string()});
  CHECK(r.code == kExitValidation);
}
