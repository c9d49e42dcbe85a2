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

#include "sfsr/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace sfsr {

inline constexpr Index kHrSize = 512;
inline constexpr int kNumFolds = 5;

/// Aligned LR/HR pair; hr extents are exactly `scale` times lr extents.
struct ImagePair {
  Tensor<float> lr;  // [3, H/r, W/r]
  Tensor<float> hr;  // [3, H, W]
  std::string id;
  Index scale = 1;
};

// --- PNG ---------------------------------------------------------------------

/// 8-bit PNG -> [3,H,W] with values byte/255. Grayscale is replicated to three
/// channels, alpha is dropped; 16-bit and palette-free oddities are rejected.
Tensor<float> load_image(const std::filesystem::path& path);

/// [3,H,W] (or [1,3,H,W]) in [0,1] -> 8-bit RGB PNG, byte = floor(v*255 + 0.5).
void save_image(const Tensor<float>& image, const std::filesystem::path& path);

/// Quantization used by save_image.
std::uint8_t to_byte(float v);

// --- Degradation ---------------------------------------------------------------

/// Bicubic resize to size x size and clamp to [0,1].
Tensor<float> prepare_hr(const Tensor<float>& image, Index size = kHrSize);

/// lr = clamp(bicubic(hr, H/r, W/r), 0, 1).
ImagePair make_pair(const Tensor<float>& hr, Index scale, std::string id = {});

/// Bicubic upscale of a [3,h,w] image by `scale`, clamped; the baseline predictor.
Tensor<float> bicubic_upscale(const Tensor<float>& lr, Index scale);

/// Uniform random aligned crop of patch_lr^2 LR pixels and the matching HR region.
ImagePair sample_patch(const ImagePair& pair, Index patch_lr, std::mt19937_64& rng);

// --- Splits -------------------------------------------------------------------------

struct SplitPlan {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<int> folds;  // fold of train[i], in 0..4
  std::uint64_t seed = 0;

  /// Training ids outside `fold` and validation ids inside it.
  std::vector<std::string> fold_train(int fold) const;
  std::vector<std::string> fold_val(int fold) const;

  nlohmann::json to_json() const;
  static SplitPlan from_json(const nlohmann::json& j);
};

/// Seeded shuffle; first floor(0.8 n) ids train, rest test; round-robin folds.
SplitPlan split_dataset(std::vector<std::string> ids, std::uint64_t seed);

// --- On-disk layout -------------------------------------------------------------------
//   <root>/<dataset>/hr/*.png
//   <root>/<dataset>/lr_x{r}/*.png   (+ manifest.json)
//   <root>/<dataset>/split.json

struct DatasetLayout {
  std::filesystem::path root;
  std::string name;

  std::filesystem::path dir() const { return root / name; }
  std::filesystem::path hr_dir() const { return dir() / "hr"; }
  std::filesystem::path lr_dir(Index scale) const { return dir() / ("lr_x" + std::to_string(scale)); }
  std::filesystem::path split_path() const { return dir() / "split.json"; }
  std::filesystem::path hr_path(const std::string& id) const { return hr_dir() / (id + ".png"); }
  std::filesystem::path lr_path(const std::string& id, Index scale) const { return lr_dir(scale) / (id + ".png"); }

  /// Sorted stems of hr/*.png.
  std::vector<std::string> list_ids() const;
};

/// Loads prepared HR and cached LR images for `ids`.
std::vector<ImagePair> load_pairs(const DatasetLayout& layout, const std::vector<std::string>& ids, Index scale,
                                  Index hr_size = kHrSize);

std::uint32_t crc32_of_file(const std::filesystem::path& path);

}  // namespace sfsr
