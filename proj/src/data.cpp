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

#include "sfsr/data.hpp"

#include "sfsr/ops.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace sfsr {

namespace fs = std::filesystem;

Tensor<float> load_image(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw IoError("unsupported PNG " + path.string() + ": only 8-bit images are accepted");
  }
  image.format = PNG_FORMAT_RGBA;
  const Index h = image.height, w = image.width;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Tensor<float> out({3, h, w});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < 3; ++c) out(c, i, j) = static_cast<float>(buf[(i * w + j) * 4 + c]) / 255.0f;
  return out;
}

std::uint8_t to_byte(float v) {
  const double b = std::floor(static_cast<double>(v) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(b, 0.0, 255.0));
}

void save_image(const Tensor<float>& image, const fs::path& path) {
  Tensor<float> img = image;
  if (img.rank() == 4 && img.dim(0) == 1) img = img.reshaped({img.dim(1), img.dim(2), img.dim(3)});
  if (img.rank() != 3 || img.dim(0) != 3) throw ShapeError("save_image expects [3,H,W], got " + shape_string(img.shape()));
  const Index h = img.dim(1), w = img.dim(2);
  std::vector<png_byte> buf(static_cast<std::size_t>(h * w * 3));
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index c = 0; c < 3; ++c) buf[(i * w + j) * 3 + c] = to_byte(img(c, i, j));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(w);
  out.height = static_cast<png_uint_32>(h);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + out.message);
  }
}

namespace {
Tensor<float> as_batch(const Tensor<float>& img) {
  if (img.rank() != 3) throw ShapeError("expected a [C,H,W] image, got " + shape_string(img.shape()));
  return img.reshaped({1, img.dim(0), img.dim(1), img.dim(2)});
}
Tensor<float> unbatch(const Tensor<float>& t) { return t.reshaped({t.dim(1), t.dim(2), t.dim(3)}); }
}  // namespace

Tensor<float> prepare_hr(const Tensor<float>& image, Index size) {
  return unbatch(clamp(bicubic_resize(as_batch(image), size, size), 0.0f, 1.0f));
}

ImagePair make_pair(const Tensor<float>& hr, Index scale, std::string id) {
  if (scale < 1) throw ValueError("scale must be >= 1");
  if (hr.rank() != 3) throw ShapeError("make_pair expects a [3,H,W] image");
  if (hr.dim(1) % scale != 0 || hr.dim(2) % scale != 0) {
    throw ShapeError("HR extents " + std::to_string(hr.dim(1)) + "x" + std::to_string(hr.dim(2)) +
                     " not divisible by scale " + std::to_string(scale));
  }
  Tensor<float> lr = unbatch(clamp(bicubic_resize(as_batch(hr), hr.dim(1) / scale, hr.dim(2) / scale), 0.0f, 1.0f));
  return {std::move(lr), hr, std::move(id), scale};
}

Tensor<float> bicubic_upscale(const Tensor<float>& lr, Index scale) {
  return unbatch(clamp(bicubic_resize(as_batch(lr), lr.dim(1) * scale, lr.dim(2) * scale), 0.0f, 1.0f));
}

ImagePair sample_patch(const ImagePair& pair, Index patch_lr, std::mt19937_64& rng) {
  const Index h = pair.lr.dim(1), w = pair.lr.dim(2), r = pair.scale;
  if (patch_lr < 1 || patch_lr > h || patch_lr > w) {
    throw ValueError("patch size " + std::to_string(patch_lr) + " exceeds LR extents " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  std::uniform_int_distribution<Index> di(0, h - patch_lr), dj(0, w - patch_lr);
  const Index oi = di(rng), oj = dj(rng);
  const auto cut = [](const Tensor<float>& src, Index i0, Index j0, Index size) {
    Tensor<float> out({src.dim(0), size, size});
    for (Index c = 0; c < src.dim(0); ++c)
      for (Index i = 0; i < size; ++i)
        for (Index j = 0; j < size; ++j) out(c, i, j) = src(c, i0 + i, j0 + j);
    return out;
  };
  return {cut(pair.lr, oi, oj, patch_lr), cut(pair.hr, oi * r, oj * r, patch_lr * r), pair.id, r};
}

// --- splits ------------------------------------------------------------------------

std::vector<std::string> SplitPlan::fold_train(int fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (folds[i] != fold) out.push_back(train[i]);
  return out;
}

std::vector<std::string> SplitPlan::fold_val(int fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (folds[i] == fold) out.push_back(train[i]);
  return out;
}

nlohmann::json SplitPlan::to_json() const {
  return {{"seed", seed}, {"train", train}, {"test", test}, {"folds", folds}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
  SplitPlan p;
  try {
    p.seed = j.at("seed").get<std::uint64_t>();
    p.train = j.at("train").get<std::vector<std::string>>();
    p.test = j.at("test").get<std::vector<std::string>>();
    p.folds = j.at("folds").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValueError(std::string("malformed split plan: ") + e.what());
  }
  if (p.folds.size() != p.train.size()) throw ValueError("split plan: fold list does not match train ids");
  return p;
}

SplitPlan split_dataset(std::vector<std::string> ids, std::uint64_t seed) {
  if (ids.size() < static_cast<std::size_t>(kNumFolds)) {
    throw ValueError("need at least 5 ids to split, got " + std::to_string(ids.size()));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ValueError("duplicate ids in dataset");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n_train = ids.size() * 4 / 5;
  SplitPlan plan;
  plan.seed = seed;
  plan.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  for (std::size_t i = 0; i < n_train; ++i) plan.folds.push_back(static_cast<int>(i % kNumFolds));
  return plan;
}

// --- layout --------------------------------------------------------------------------------

std::vector<std::string> DatasetLayout::list_ids() const {
  std::vector<std::string> ids;
  if (!fs::is_directory(hr_dir())) throw IoError("HR directory " + hr_dir().string() + " does not exist");
  for (const auto& entry : fs::directory_iterator(hr_dir())) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<ImagePair> load_pairs(const DatasetLayout& layout, const std::vector<std::string>& ids, Index scale,
                                  Index hr_size) {
  std::vector<ImagePair> pairs;
  for (const auto& id : ids) {
    Tensor<float> hr = load_image(layout.hr_path(id));
    if (hr_size > 0) hr = prepare_hr(hr, hr_size);
    const fs::path lr_path = layout.lr_path(id, scale);
    if (!fs::exists(lr_path)) throw IoError("missing LR cache for '" + id + "': " + lr_path.string());
    Tensor<float> lr = load_image(lr_path);
    if (lr.dim(1) * scale != hr.dim(1) || lr.dim(2) * scale != hr.dim(2)) {
      throw ShapeError("LR cache for '" + id + "' does not match HR extents at scale " + std::to_string(scale));
    }
    pairs.push_back({std::move(lr), std::move(hr), id, scale});
  }
  return pairs;
}

std::uint32_t crc32_of_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace sfsr
