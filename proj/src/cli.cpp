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

#include "sfsr/checkpoint.hpp"
#include "sfsr/config.hpp"
#include "sfsr/data.hpp"
#include "sfsr/metrics.hpp"
#include "sfsr/model.hpp"
#include "sfsr/model_check.hpp"
#include "sfsr/training.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>

namespace sfsr {

namespace fs = std::filesystem;

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << "error: kind=" << kind << " message=" << quoted(message) << '\n';
}

fs::path resolve_root(const std::string& flag, const fs::path& from_config = {}) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("SFSR_DATA_ROOT"); env && *env) return env;
  throw ValueError("no data root: pass --root or set SFSR_DATA_ROOT");
}

void require_scale(Index scale) {
  if (scale != 2 && scale != 4) throw ValueError("scale must be 2 or 4, got " + std::to_string(scale));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  apply_overrides(cfg, overrides);
  cfg.validate();
  return cfg;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// --- commands ------------------------------------------------------------------------------

struct DegradeArgs {
  std::string root, dataset;
  Index scale = 2;
  Index hr_size = kHrSize;
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out, std::ostream& err) {
  require_scale(a.scale);
  if (a.hr_size < 0 || (a.hr_size > 0 && a.hr_size % a.scale != 0)) throw ValueError("hr-size must be a multiple of scale");
  const DatasetLayout layout{resolve_root(a.root), a.dataset};
  const auto ids = layout.list_ids();
  if (ids.empty()) throw ValueError("no images in " + layout.hr_dir().string());

  nlohmann::json manifest = {{"dataset", a.dataset}, {"scale", a.scale}, {"hr_size", a.hr_size}};
  manifest["images"] = nlohmann::json::array();
  std::vector<std::pair<std::string, std::string>> failures;
  for (const auto& id : ids) {
    try {
      Tensor<float> hr = load_image(layout.hr_path(id));
      if (a.hr_size > 0) hr = prepare_hr(hr, a.hr_size);
      const ImagePair pair = make_pair(hr, a.scale, id);
      const fs::path dst = layout.lr_path(id, a.scale);
      save_image(pair.lr, dst);
      manifest["images"].push_back({{"id", id},
                                    {"hr_height", pair.hr.dim(1)},
                                    {"hr_width", pair.hr.dim(2)},
                                    {"lr_height", pair.lr.dim(1)},
                                    {"lr_width", pair.lr.dim(2)},
                                    {"crc32", hex32(crc32_of_file(dst))}});
    } catch (const Error& e) {
      failures.emplace_back(id, e.what());
    }
  }
  write_text(layout.lr_dir(a.scale) / "manifest.json", manifest.dump(2) + "\n");
  for (const auto& [id, msg] : failures) {
    err << "error: kind=io id=" << id << " message=" << quoted(msg) << '\n';
  }
  out << "degraded " << (ids.size() - failures.size()) << "/" << ids.size() << " images into "
      << layout.lr_dir(a.scale).string() << '\n';
  return failures.empty() ? kExitOk : kExitRuntime;
}

struct SplitArgs {
  std::string root, dataset, out;
  std::uint64_t seed = 0;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const DatasetLayout layout{resolve_root(a.root), a.dataset};
  const SplitPlan plan = split_dataset(layout.list_ids(), a.seed);
  const fs::path dst = a.out.empty() ? layout.split_path() : fs::path(a.out);
  write_text(dst, plan.to_json().dump(2) + "\n");
  out << "train=" << plan.train.size() << " test=" << plan.test.size() << " folds=" << kNumFolds
      << " seed=" << plan.seed << " -> " << dst.string() << '\n';
  return kExitOk;
}

SplitPlan read_split(const DatasetLayout& layout) {
  std::ifstream f(layout.split_path());
  if (!f) throw IoError("split plan " + layout.split_path().string() + " not found; run `sfsr split` first");
  try {
    return SplitPlan::from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse " + layout.split_path().string() + ": " + e.what());
  }
}

struct TrainArgs {
  std::string config, root;
  std::vector<std::string> overrides;
  int fold = 0;
  bool resume = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = resolve_config(a.config, a.overrides);
  if (a.fold < 0 || a.fold >= kNumFolds) throw ValueError("fold must be in 0..4, got " + std::to_string(a.fold));
  if (cfg.dataset.empty()) throw ValueError("config has no dataset");
  const DatasetLayout layout{resolve_root(a.root, cfg.root), cfg.dataset};
  const SplitPlan split = read_split(layout);

  const auto train_pairs = load_pairs(layout, split.fold_train(a.fold), cfg.model.scale, cfg.hr_size);
  const auto val_pairs = load_pairs(layout, split.fold_val(a.fold), cfg.model.scale, cfg.hr_size);

  TrainConfig tc = cfg.train;
  tc.checkpoint_path = cfg.checkpoint_path();
  tc.log_path = cfg.log_path();
  TrainSession session = TrainSession::start(build<float>(cfg.model, cfg.init_seed));
  if (a.resume && fs::exists(tc.checkpoint_path)) {
    session = session_from_checkpoint(read_checkpoint(tc.checkpoint_path));
    if (!(session.model.config == cfg.model)) throw ValueError("checkpoint model config differs from the run config");
  } else if (fs::exists(tc.log_path)) {
    fs::remove(tc.log_path);
  }
  const auto log = train(session, train_pairs, val_pairs, tc);
  out << "trained " << log.size() << " steps (total " << session.step << ")";
  if (!log.empty()) out << ", final loss " << log.back().loss;
  out << "\ncheckpoint: " << tc.checkpoint_path.string() << "\nlog: " << tc.log_path.string() << '\n';
  return kExitOk;
}

struct InferArgs {
  std::string checkpoint, input, output;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const Model<float> model = model_from_checkpoint(read_checkpoint(a.checkpoint));
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(a.input)) {
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(a.input))
      if (e.is_regular_file() && e.path().extension() == ".png") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) throw ValueError("no PNG files in " + a.input);
    for (const auto& p : inputs) jobs.emplace_back(p, fs::path(a.output) / p.filename());
  } else {
    if (!fs::exists(a.input)) throw ValueError("input " + a.input + " does not exist");
    jobs.emplace_back(a.input, a.output);
  }
  for (const auto& [src, dst] : jobs) {
    const Tensor<float> sr = upscale_image(model, load_image(src));
    save_image(sr, dst);
    out << src.string() << " -> " << dst.string() << " (" << sr.dim(1) << "x" << sr.dim(2) << ")\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, root, dataset, split = "test", csv, per_image_csv, label;
  Index scale = 0;
  Index hr_size = kHrSize;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::optional<Model<float>> model;
  Index scale = a.scale;
  if (!a.checkpoint.empty()) {
    model = model_from_checkpoint(read_checkpoint(a.checkpoint));
    if (scale == 0) scale = model->config.scale;
    if (scale != model->config.scale) throw ValueError("--scale differs from the checkpoint's scale");
  }
  require_scale(scale);
  const DatasetLayout layout{resolve_root(a.root), a.dataset};
  std::vector<std::string> ids;
  if (a.split == "test") {
    ids = read_split(layout).test;
  } else if (a.split == "all") {
    ids = layout.list_ids();
  } else {
    throw ValueError("--split must be 'test' or 'all'");
  }
  const auto pairs = load_pairs(layout, ids, scale, a.hr_size);
  const MetricReport report =
      model ? evaluate(*model, pairs)
            : evaluate([scale](const Tensor<float>& lr) { return bicubic_upscale(lr, scale); }, pairs);
  const std::string label = !a.label.empty() ? a.label : (model ? "SwinFSR" : "Bicubic");
  const std::vector<TableEntry> table{{label, a.dataset, static_cast<long>(scale), report.mean_ssim, report.mean_psnr}};
  out << render_table(table);
  if (!a.csv.empty()) write_text(a.csv, render_table_csv(table));
  if (!a.per_image_csv.empty()) write_text(a.per_image_csv, report_csv(report));
  return kExitOk;
}

struct ConfigArgs {
  std::string config;
  std::vector<std::string> overrides;
};

int cmd_param_count(const ConfigArgs& a, Index tokens, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.config, a.overrides);
  const ParamBreakdown b = param_count(cfg.model);
  const auto row = [&](const std::string& name, Index v) { out << std::left << std::setw(22) << name << std::right << std::setw(14) << v << '\n'; };
  out << std::left << std::setw(22) << "block" << std::right << std::setw(14) << "parameters" << '\n';
  row("H_LF", b.h_lf);
  row("DCA", b.dca);
  row("patch_embed_norm", b.embed_norm);
  row("attention", b.attention);
  row("conv_mlp", b.conv_mlp);
  row("layer_norm", b.layer_norm);
  row("SCA", b.sca);
  row("H_REC", b.h_rec);
  row("iRSTB_subtotal", b.irstb());
  row("total", b.total());

  if (tokens <= 0) tokens = cfg.train.patch_lr * cfg.train.patch_lr;
  const Index c = cfg.model.embed_channels, h = cfg.model.hidden();
  const Index conv = c * h + h * c;  // bias-free kernel-1 weights of both layers
  const Index dense = tokens * conv;
  out << "conv_mlp_vs_dense: tokens=" << tokens << " X_in=" << c << " X_out=" << h << " conv1d=" << conv
      << " dense=" << dense << " ratio=" << dense / conv << '\n';
  return kExitOk;
}

int cmd_gradcheck(const ConfigArgs& a, double tolerance, const std::string& corrupt, std::ostream& out) {
  const RunConfig cfg = resolve_config(a.config, a.overrides);
  ModelCheckOptions opts;
  opts.seed = cfg.init_seed;
  opts.input_size = cfg.gradcheck_size;
  opts.corrupt_param = corrupt;
  const GradCheckReport report = check_model_gradients(cfg.model, opts);
  for (const auto& e : report.entries) {
    out << std::left << std::setw(40) << e.name << std::right << std::scientific << std::setprecision(3)
        << e.max_rel_error << std::defaultfloat << '\n';
  }
  const auto& worst = report.worst();
  out << "worst: " << worst.name << " index=" << worst.worst_index << " rel_error=" << std::scientific
      << std::setprecision(3) << worst.max_rel_error << " analytic=" << worst.analytic << " numeric=" << worst.numeric
      << std::defaultfloat << '\n';
  const bool ok = report.passed(tolerance);
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << tolerance << ")\n";
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fundus image super-resolution: degrade, split, train, infer, evaluate", "sfsr"};
  app.require_subcommand(1);
  std::function<int()> action;

  DegradeArgs degrade;
  auto* c_degrade = app.add_subcommand("degrade", "Resize HR images and cache bicubic LR inputs");
  c_degrade->add_option("--root", degrade.root, "Data root (default: $SFSR_DATA_ROOT)");
  c_degrade->add_option("--dataset", degrade.dataset, "Dataset name")->required();
  c_degrade->add_option("--scale", degrade.scale, "Upscale factor (2 or 4)")->required();
  c_degrade->add_option("--hr-size", degrade.hr_size, "HR side after resize; 0 keeps native extents");
  c_degrade->callback([&] { action = [&] { return cmd_degrade(degrade, out, err); }; });

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Write an 80/20 split with 5 folds");
  c_split->add_option("--root", split.root, "Data root (default: $SFSR_DATA_ROOT)");
  c_split->add_option("--dataset", split.dataset, "Dataset name")->required();
  c_split->add_option("--seed", split.seed, "Shuffle seed");
  c_split->add_option("--out", split.out, "Output path (default: <root>/<dataset>/split.json)");
  c_split->callback([&] { action = [&] { return cmd_split(split, out); }; });

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "Train on one cross-validation fold");
  c_train->add_option("--config", train_args.config, "Run config file")->required();
  c_train->add_option("--fold", train_args.fold, "Validation fold (0-4)");
  c_train->add_option("--root", train_args.root, "Data root override");
  c_train->add_option("--set", train_args.overrides, "key=value config override (repeatable)");
  c_train->add_flag("--resume", train_args.resume, "Continue from the run's checkpoint if present");
  c_train->callback([&] { action = [&] { return cmd_train(train_args, out); }; });

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "Upscale PNG images with a checkpoint");
  c_infer->add_option("--checkpoint", infer.checkpoint, "Checkpoint file")->required();
  c_infer->add_option("--input", infer.input, "Input PNG or directory")->required();
  c_infer->add_option("--output", infer.output, "Output PNG or directory")->required();
  c_infer->callback([&] { action = [&] { return cmd_infer(infer, out); }; });

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score a checkpoint (or the bicubic baseline) with PSNR/SSIM");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint; omit for the bicubic baseline");
  c_eval->add_option("--root", eval.root, "Data root (default: $SFSR_DATA_ROOT)");
  c_eval->add_option("--dataset", eval.dataset, "Dataset name")->required();
  c_eval->add_option("--scale", eval.scale, "Upscale factor (2 or 4)");
  c_eval->add_option("--split", eval.split, "Image set: test or all");
  c_eval->add_option("--hr-size", eval.hr_size, "HR side after resize; 0 keeps native extents");
  c_eval->add_option("--csv", eval.csv, "Write the table as CSV");
  c_eval->add_option("--per-image-csv", eval.per_image_csv, "Write per-image scores as CSV");
  c_eval->add_option("--label", eval.label, "Model name shown in the table");
  c_eval->callback([&] { action = [&] { return cmd_eval(eval, out); }; });

  ConfigArgs pc;
  Index tokens = 0;
  auto* c_pc = app.add_subcommand("param-count", "Parameter breakdown per block family");
  c_pc->add_option("--config", pc.config, "Run config file");
  c_pc->add_option("--set", pc.overrides, "key=value config override (repeatable)");
  c_pc->add_option("--tokens", tokens, "Token count for the dense-MLP comparison (default patch_lr^2)");
  c_pc->callback([&] { action = [&] { return cmd_param_count(pc, tokens, out); }; });

  ConfigArgs gc;
  double tolerance = 1e-4;
  std::string corrupt;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
  c_gc->add_option("--config", gc.config, "Run config file");
  c_gc->add_option("--set", gc.overrides, "key=value config override (repeatable)");
  c_gc->add_option("--tolerance", tolerance, "Maximum relative error");
  c_gc->add_option("--corrupt-adjoint", corrupt, "Test hook: perturb one parameter's analytic gradient")
      ->group("");
  c_gc->callback([&] { action = [&] { return cmd_gradcheck(gc, tolerance, corrupt, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitValidation;
  }

  try {
    return action();
  } catch (const ValueError& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const ShapeError& e) {
    report_error(err, "validation", e.what());
    return kExitValidation;
  } catch (const NumericError& e) {
    report_error(err, "numeric", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitRuntime;
  }
}

}  // namespace sfsr
