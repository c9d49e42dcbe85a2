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

// Flat `key = value` run configuration. Lines starting with '#' are
// comments; every key is typed and unknown keys are rejected.

#pragma once

#include "sfsr/data.hpp"
#include "sfsr/model.hpp"
#include "sfsr/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sfsr {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  std::filesystem::path root;
  std::string dataset;
  std::filesystem::path out_dir = "runs";
  Index hr_size = kHrSize;  // 0 keeps native HR extents
  Index gradcheck_size = 8;

  void validate() const;
  std::filesystem::path checkpoint_path() const { return out_dir / "checkpoint.sfsr"; }
  std::filesystem::path log_path() const { return out_dir / "log.csv"; }
};

/// Names of all accepted keys, in canonical order.
const std::vector<std::string>& run_config_keys();

void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses config text; errors carry the line number. Does not validate.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies `key=value` overrides.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides);

std::string format_run_config(const RunConfig& cfg);

}  // namespace sfsr
