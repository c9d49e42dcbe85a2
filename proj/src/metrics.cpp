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

#include "sfsr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace sfsr {

namespace {

using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> gaussian_window(const SsimParams& p) {
  std::vector<double> w(static_cast<std::size_t>(p.window));
  const double center = (p.window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) sum += (w[i] = std::exp(-0.5 * std::pow((i - center) / p.sigma, 2)));
  for (auto& v : w) v /= sum;
  return w;
}

// Half-sample symmetric reflection: d c b a | a b c d | d c b a.
Index mirror(Index i, Index n) {
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Separable same-size filtering.
Plane filter(const Plane& x, const std::vector<double>& k) {
  const Index h = x.rows(), w = x.cols();
  const auto half = static_cast<Index>(k.size() / 2);
  Plane tmp(h, w), out(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Index t = 0; t < static_cast<Index>(k.size()); ++t) acc += k[t] * x(i, mirror(j + t - half, w));
      tmp(i, j) = acc;
    }
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      double acc = 0.0;
      for (Index t = 0; t < static_cast<Index>(k.size()); ++t) acc += k[t] * tmp(mirror(i + t - half, h), j);
      out(i, j) = acc;
    }
  return out;
}

double plane_ssim(const Plane& a, const Plane& b, const std::vector<double>& k, const SsimParams& p) {
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2);
  const double c2 = std::pow(p.k2 * p.dynamic_range, 2);
  const Plane mu_a = filter(a, k);
  const Plane mu_b = filter(b, k);
  const Plane var_a = filter(a * a, k) - mu_a * mu_a;
  const Plane var_b = filter(b * b, k) - mu_b * mu_b;
  const Plane cov = filter(a * b, k) - mu_a * mu_b;
  const Plane num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
  const Plane den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
  return (num / den).mean();
}

std::string fmt(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

double mse(const Tensor<float>& a, const Tensor<float>& b) {
  a.require_same_shape(b, "mse");
  return (a.array().cast<double>() - b.array().cast<double>()).square().mean();
}

double psnr(const Tensor<float>& a, const Tensor<float>& b, double max_val) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / e);
}

double ssim(const Tensor<float>& a, const Tensor<float>& b, const SsimParams& params) {
  a.require_same_shape(b, "ssim");
  if (a.rank() < 2) throw ShapeError("ssim expects image planes");
  const Index h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
  if (h < params.window || w < params.window) {
    throw ShapeError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than the " +
                     std::to_string(params.window) + "x" + std::to_string(params.window) + " window");
  }
  const auto k = gaussian_window(params);
  const Index planes = a.size() / (h * w);
  double total = 0.0;
  for (Index p = 0; p < planes; ++p) {
    const Plane pa = Eigen::Map<const Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                         a.data() + p * h * w, h, w)
                         .cast<double>();
    const Plane pb = Eigen::Map<const Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                         b.data() + p * h * w, h, w)
                         .cast<double>();
    total += plane_ssim(pa, pb, k, params);
  }
  return total / static_cast<double>(planes);
}

MetricReport summarize(std::vector<ImageScore> images) {
  if (images.empty()) throw ValueError("cannot summarize an empty score list");
  MetricReport r;
  r.images = std::move(images);
  const auto n = static_cast<double>(r.images.size());
  for (const auto& s : r.images) {
    r.mean_psnr += s.psnr;
    r.mean_ssim += s.ssim;
  }
  r.mean_psnr /= n;
  r.mean_ssim /= n;
  for (const auto& s : r.images) {
    r.std_psnr += (s.psnr - r.mean_psnr) * (s.psnr - r.mean_psnr);
    r.std_ssim += (s.ssim - r.mean_ssim) * (s.ssim - r.mean_ssim);
  }
  r.std_psnr = std::isfinite(r.mean_psnr) ? std::sqrt(r.std_psnr / n) : 0.0;
  r.std_ssim = std::sqrt(r.std_ssim / n);
  return r;
}

std::string report_csv(const MetricReport& report) {
  std::ostringstream os;
  os << "id,psnr,ssim\n";
  for (const auto& s : report.images) os << s.id << ',' << fmt(capped_psnr(s.psnr), 6) << ',' << fmt(s.ssim, 8) << '\n';
  os << "mean," << fmt(capped_psnr(report.mean_psnr), 6) << ',' << fmt(report.mean_ssim, 8) << '\n';
  os << "std," << fmt(report.std_psnr, 6) << ',' << fmt(report.std_ssim, 8) << '\n';
  return os.str();
}

std::string render_table(const std::vector<TableEntry>& entries) {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  std::set<long> scales;
  std::map<std::tuple<long, std::string, std::string>, const TableEntry*> cell;
  for (const auto& e : entries) {
    if (std::find(datasets.begin(), datasets.end(), e.dataset) == datasets.end()) datasets.push_back(e.dataset);
    if (std::find(models.begin(), models.end(), e.model) == models.end()) models.push_back(e.model);
    scales.insert(e.scale);
    cell[{e.scale, e.model, e.dataset}] = &e;
  }
  std::size_t model_w = 5;
  for (const auto& m : models) model_w = std::max(model_w, m.size());
  constexpr std::size_t col_w = 8;
  const auto pad = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
  };
  const auto left = [](const std::string& s, std::size_t w) {
    return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
  };

  std::ostringstream os;
  std::string header = left("Dataset", model_w);
  for (const auto& d : datasets) header += " | " + left(d, 2 * col_w + 3);
  const std::string rule(header.size(), '-');
  os << header << '\n' << rule << '\n';
  for (long s : scales) {
    os << s << "X\n";
    std::string sub = left("Model", model_w);
    for (std::size_t i = 0; i < datasets.size(); ++i) sub += " | " + pad("SSIM", col_w) + " | " + pad("PSNR", col_w);
    os << sub << '\n' << rule << '\n';
    for (const auto& m : models) {
      std::string row = left(m, model_w);
      bool any = false;
      for (const auto& d : datasets) {
        const auto it = cell.find({s, m, d});
        if (it == cell.end()) {
          row += " | " + pad("-", col_w) + " | " + pad("-", col_w);
        } else {
          any = true;
          row += " | " + pad(fmt(100.0 * it->second->ssim, 2), col_w) + " | " +
                 pad(fmt(capped_psnr(it->second->psnr), 2), col_w);
        }
      }
      if (any) os << row << '\n';
    }
    os << rule << '\n';
  }
  return os.str();
}

std::string render_table_csv(const std::vector<TableEntry>& entries) {
  std::ostringstream os;
  os << "model,dataset,scale,ssim,psnr\n";
  for (const auto& e : entries) {
    os << e.model << ',' << e.dataset << ',' << e.scale << ',' << fmt(e.ssim, 8) << ',' << fmt(capped_psnr(e.psnr), 6)
       << '\n';
  }
  return os.str();
}

}  // namespace sfsr
