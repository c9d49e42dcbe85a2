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

#include <functional>
#include <string>
#include <vector>

namespace sfsr {

inline constexpr double kGradCheckStep = 1e-3;
/// Denominator floor: below it the error is measured in absolute terms, so a
/// structurally zero gradient (e.g. an attention key bias) is not scored by
/// finite-difference round-off alone.
inline constexpr double kGradCheckFloor = 1e-4;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
  }
  const GradCheckEntry& worst() const {
    if (entries.empty()) throw ValueError("gradient report is empty");
    return *std::max_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.max_rel_error < b.max_rel_error;
    });
  }
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

struct NamedTensorRef {
  std::string name;
  Tensor<double>* tensor;
};

/// Compares analytic gradients against fourth-order central differences
/// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h, element by element.
///
/// `loss` is evaluated with the parameters perturbed in place; every
/// perturbation is undone before the next. The relative error of an element
/// is |ga - gfd| / max(|ga|, |gfd|, kGradCheckFloor); each entry keeps the worst one.
inline GradCheckReport check_gradients(const std::function<double()>& loss,
                                       const std::vector<NamedTensorRef>& params,
                                       const std::vector<Tensor<double>>& analytic,
                                       double step = kGradCheckStep) {
  if (params.size() != analytic.size()) throw ValueError("check_gradients: gradient list size mismatch");
  if (!std::isfinite(loss())) throw NumericError("check_gradients: non-finite loss");
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<double>& t = *params[p].tensor;
    t.require_same_shape(analytic[p], "check_gradients");
    GradCheckEntry entry{params[p].name};
    for (Index i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      const auto at = [&](double offset) {
        t[i] = saved + offset;
        const double v = loss();
        if (!std::isfinite(v)) throw NumericError("check_gradients: non-finite loss perturbing " + params[p].name);
        return v;
      };
      const double up1 = at(step), down1 = at(-step), up2 = at(2.0 * step), down2 = at(-2.0 * step);
      t[i] = saved;
      const double numeric = (8.0 * (up1 - down1) - (up2 - down2)) / (12.0 * step);
      const double ga = analytic[p][i];
      const double rel = std::abs(ga - numeric) / std::max({std::abs(ga), std::abs(numeric), kGradCheckFloor});
      if (rel > entry.max_rel_error || i == 0) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = ga;
        entry.numeric = numeric;
      }
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace sfsr
