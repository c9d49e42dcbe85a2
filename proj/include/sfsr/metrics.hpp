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

#include <string>
#include <vector>

namespace sfsr {

/// Value written in place of +inf PSNR in tables and CSV.
inline constexpr double kPsnrCap = 100.0;

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

double mse(const Tensor<float>& a, const Tensor<float>& b);

/// 10*log10(max^2 / mse); +infinity for identical inputs.
double psnr(const Tensor<float>& a, const Tensor<float>& b, double max_val = 1.0);

/// Mean SSIM over every pixel of every channel plane. Accepts [C,H,W] or
/// [N,C,H,W]; local statistics use a normalized Gaussian window with
/// half-sample symmetric reflection at the borders.
double ssim(const Tensor<float>& a, const Tensor<float>& b, const SsimParams& params = {});

/// PSNR with +inf replaced by the table cap.
inline double capped_psnr(double v) { return v > kPsnrCap ? kPsnrCap : v; }

struct ImageScore {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<ImageScore> images;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double std_psnr = 0.0;
  double std_ssim = 0.0;
};

/// Means and population standard deviations over the per-image scores.
MetricReport summarize(std::vector<ImageScore> images);

/// `id,psnr,ssim` rows followed by `mean` and `std` rows.
std::string report_csv(const MetricReport& report);

struct TableEntry {
  std::string model;
  std::string dataset;
  long scale = 2;
  double ssim = 0.0;  // in [0,1]; rendered x100
  double psnr = 0.0;
};

/// Aligned text table: one section per scale, one SSIM/PSNR column pair per dataset.
std::string render_table(const std::vector<TableEntry>& entries);
/// The same entries as CSV: model,dataset,scale,ssim,psnr.
std::string render_table_csv(const std::vector<TableEntry>& entries);

}  // namespace sfsr
