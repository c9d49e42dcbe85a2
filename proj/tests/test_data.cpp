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
#include "support/random.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>
#include <png.h>

#include <fstream>
#include <set>

using namespace sfsr;
using sfsr::testing::TempDir;

namespace {

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Writes a PNG in an arbitrary libpng format, bypassing the module under test.
void write_raw_png(const std::filesystem::path& path, png_uint_32 format, int w, int h,
                   const std::vector<std::uint8_t>& pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr) != 0);
}

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("img" + std::to_string(1000 + i));
  return ids;
}

}  // namespace

TEST_CASE("byte quantization") {
  CHECK(to_byte(1.0f) == 255);
  CHECK(to_byte(0.0f) == 0);
  CHECK(to_byte(128.0f / 255.0f) == 128);
  CHECK(to_byte(-0.3f) == 0);
  CHECK(to_byte(1.7f) == 255);
  for (int b = 0; b < 256; ++b) CHECK(to_byte(static_cast<float>(b) / 255.0f) == b);
}

TEST_CASE("PNG load and save") {
  TempDir dir;
  std::vector<std::uint8_t> rgb(4 * 3 * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<std::uint8_t>(i * 7);
  rgb[0] = 255;
  rgb[1] = 0;
  rgb[2] = 128;
  write_raw_png(dir / "a.png", PNG_FORMAT_RGB, 4, 3, rgb);
  const auto img = load_image(dir / "a.png");
  CHECK(img.shape() == Shape{3, 3, 4});
  CHECK(img(0, 0, 0) == 1.0f);
  CHECK(img(1, 0, 0) == 0.0f);
  CHECK(img(2, 0, 0) == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(img(1, 2, 3) == static_cast<float>(rgb[(2 * 4 + 3) * 3 + 1]) / 255.0f);

  save_image(img, dir / "b.png");
  CHECK(load_image(dir / "b.png") == img);
  save_image(load_image(dir / "b.png"), dir / "c.png");
  CHECK(file_bytes(dir / "b.png") == file_bytes(dir / "c.png"));
  save_image(img.reshaped({1, 3, 3, 4}), dir / "d.png");
  CHECK(file_bytes(dir / "d.png") == file_bytes(dir / "b.png"));

  write_raw_png(dir / "gray.png", PNG_FORMAT_GA, 2, 1, {10, 255, 200, 0});
  const auto gray = load_image(dir / "gray.png");
  CHECK(gray(0, 0, 0) == gray(2, 0, 0));
  CHECK(gray(1, 0, 1) == 200.0f / 255.0f);  // alpha ignored

  write_raw_png(dir / "wide.png", PNG_FORMAT_LINEAR_RGB, 1, 1, {1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(load_image(dir / "wide.png"), IoError);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_image(dir / "junk.png"), IoError);
  CHECK_THROWS_AS(save_image(Tensor<float>({1, 4, 4}), dir / "e.png"), ShapeError);
}

TEST_CASE("HR preparation") {
  const auto img = testing::random_tensor<float>({3, 24, 24}, 1, 0.0, 1.0);
  CHECK(prepare_hr(img, 24) == img);
  CHECK(prepare_hr(Tensor<float>({3, 40, 30}, 0.6f), 16) == Tensor<float>({3, 16, 16}, 0.6f));

  // Impulse grid resized 32 -> 16 equals the bicubic resize from the core, clamped.
  Tensor<float> grid({3, 32, 32});
  for (Index c = 0; c < 3; ++c)
    for (Index i = 0; i < 32; i += 5)
      for (Index j = 0; j < 32; j += 5) grid(c, i, j) = 1.0f;
  const auto expected = clamp(bicubic_resize(grid.reshaped({1, 3, 32, 32}), 16, 16), 0.0f, 1.0f);
  CHECK(prepare_hr(grid, 16) == expected.reshaped({3, 16, 16}));
}

TEST_CASE("degradation pairs") {
  const auto flat = make_pair(Tensor<float>({3, 16, 16}, 0.42f), 2, "c");
  CHECK(flat.lr == Tensor<float>({3, 8, 8}, 0.42f));
  const auto hr = testing::synthetic_fundus(32, 3);
  const auto p2 = make_pair(hr, 2);
  CHECK(p2.lr.shape() == Shape{3, 16, 16});
  CHECK(p2.hr == hr);
  CHECK(make_pair(hr, 4).lr.shape() == Shape{3, 8, 8});
  CHECK(make_pair(hr, 1).lr == hr);
  CHECK((p2.lr.array() >= 0.0f).all());
  CHECK((p2.lr.array() <= 1.0f).all());
  CHECK_THROWS_AS(make_pair(Tensor<float>({3, 10, 10}), 4), ShapeError);
  CHECK(bicubic_upscale(p2.lr, 2).shape() == hr.shape());
}

TEST_CASE("patch sampling") {
  const auto pair = make_pair(testing::synthetic_fundus(32, 4), 2, "p");
  std::mt19937_64 rng(1);
  const auto whole = sample_patch(pair, 16, rng);
  CHECK(whole.lr == pair.lr);
  CHECK(whole.hr == pair.hr);
  CHECK_THROWS_AS(sample_patch(pair, 17, rng), ValueError);

  std::mt19937_64 a(9), b(9);
  for (int k = 0; k < 30; ++k) {
    const auto pa = sample_patch(pair, 5, a);
    const auto pb = sample_patch(pair, 5, b);
    CHECK(pa.lr == pb.lr);
    CHECK(pa.hr.shape() == Shape{3, 10, 10});
    // Locate the LR offset, then the HR crop must start at r times it.
    bool found = false;
    for (Index i = 0; i + 5 <= 16 && !found; ++i)
      for (Index j = 0; j + 5 <= 16 && !found; ++j) {
        bool same = true;
        for (Index c = 0; c < 3 && same; ++c)
          for (Index y = 0; y < 5 && same; ++y)
            for (Index x = 0; x < 5 && same; ++x) same = pa.lr(c, y, x) == pair.lr(c, i + y, j + x);
        if (!same) continue;
        bool hr_same = true;
        for (Index c = 0; c < 3; ++c)
          for (Index y = 0; y < 10; ++y)
            for (Index x = 0; x < 10; ++x) hr_same = hr_same && pa.hr(c, y, x) == pair.hr(c, 2 * i + y, 2 * j + x);
        found = hr_same;
      }
    CHECK(found);
  }
}

TEST_CASE("split counts") {
  for (auto [n, train, test] : {std::tuple{400, 320, 80}, {1020, 816, 204}, {276, 220, 56}, {5, 4, 1}}) {
    const auto plan = split_dataset(make_ids(n), 0);
    CHECK(plan.train.size() == static_cast<std::size_t>(train));
    CHECK(plan.test.size() == static_cast<std::size_t>(test));
  }
  CHECK_THROWS_AS(split_dataset(make_ids(4), 0), ValueError);
  auto dup = make_ids(6);
  dup.push_back(dup[0]);
  CHECK_THROWS_AS(split_dataset(dup, 0), ValueError);
}

TEST_CASE("split plans are seeded partitions") {
  const auto ids = make_ids(120);
  const auto a = split_dataset(ids, 5);
  auto shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto b = split_dataset(shuffled, 5);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(split_dataset(ids, 6).train != a.train);

  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == ids.size());

  std::set<std::string> seen;
  std::vector<std::size_t> sizes;
  for (int f = 0; f < kNumFolds; ++f) {
    const auto val = a.fold_val(f);
    const auto train = a.fold_train(f);
    CHECK(val.size() + train.size() == a.train.size());
    sizes.push_back(val.size());
    for (const auto& id : val) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == a.train.size());
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);

  const auto round = SplitPlan::from_json(a.to_json());
  CHECK(round.train == a.train);
  CHECK(round.folds == a.folds);
  CHECK(round.seed == a.seed);
}

TEST_CASE("dataset layout and pair loading") {
  TempDir dir;
  const DatasetLayout layout{dir.path(), "set"};
  CHECK_THROWS_AS(layout.list_ids(), IoError);
  std::filesystem::create_directories(layout.hr_dir());
  for (int i = 0; i < 3; ++i) save_image(testing::synthetic_fundus(24, i), layout.hr_path("im" + std::to_string(i)));
  std::ofstream(layout.hr_dir() / "notes.txt") << "x";
  CHECK(layout.list_ids() == std::vector<std::string>{"im0", "im1", "im2"});

  CHECK_THROWS_AS(load_pairs(layout, {"im0"}, 2, 16), IoError);
  for (const auto& id : layout.list_ids()) {
    const auto pair = make_pair(prepare_hr(load_image(layout.hr_path(id)), 16), 2, id);
    save_image(pair.lr, layout.lr_path(id, 2));
  }
  const auto pairs = load_pairs(layout, {"im2", "im0"}, 2, 16);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].id == "im2");
  CHECK(pairs[0].hr.shape() == Shape{3, 16, 16});
  CHECK(pairs[0].lr.shape() == Shape{3, 8, 8});
  CHECK_THROWS_AS(load_pairs(layout, {"im0"}, 2, 24), ShapeError);
  CHECK(crc32_of_file(layout.lr_path("im0", 2)) == crc32_of_file(layout.lr_path("im0", 2)));
}
