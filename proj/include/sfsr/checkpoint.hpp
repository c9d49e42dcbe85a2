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

// Binary checkpoint container.
//
//   "SFSR"                      4 bytes magic
//   version                     u32 little-endian
//   json length                 u64 little-endian
//   json                        UTF-8 metadata ({"model": {...}, ...})
//   records until EOF:
//     name length               u32
//     name                      UTF-8 bytes
//     rank                      u32
//     extents                   rank x u64
//     values                    product(extents) x f32 little-endian

#pragma once

#include "sfsr/model.hpp"
#include "sfsr/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sfsr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<float>>> records;

  const Tensor<float>* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Model parameters as records, config under meta["model"].
Checkpoint checkpoint_from_model(const Model<float>& model);
/// Rebuilds a model; every parameter must be present with the right shape.
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace sfsr
