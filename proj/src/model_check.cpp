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

#include "sfsr/model_check.hpp"

#include <random>

namespace sfsr {

GradCheckReport check_model_gradients(const ModelConfig& config, const ModelCheckOptions& options) {
  Model<double> model = build<double>(config, options.seed);
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto params = named_parameters(model.params);
  for (auto& [name, t] : params) {
    const bool is_gamma = name.size() >= 6 && name.compare(name.size() - 6, 6, ".gamma") == 0;
    for (Index i = 0; i < t->size(); ++i) (*t)[i] = is_gamma ? 1.0 + 0.1 * normal(rng) : 0.2 * normal(rng);
  }

  const Index s = options.input_size;
  Tensor<double> input({1, config.image_channels, s, s});
  for (Index i = 0; i < input.size(); ++i) input[i] = unit(rng);
  Tensor<double> probe({1, config.image_channels, s * config.scale, s * config.scale});
  for (Index i = 0; i < probe.size(); ++i) probe[i] = normal(rng);

  const auto objective = [&] {
    return (forward(model, input, Mode::Training).array() * probe.array()).sum();
  };

  ModelCache<double> cache;
  forward(model, input, Mode::Training, &cache);
  ModelParams<double> grads = backward(model, cache, probe);

  std::vector<NamedTensorRef> refs;
  std::vector<Tensor<double>> analytic;
  for (auto& [name, t] : params) refs.push_back({name, t});
  for (auto& [name, t] : named_parameters(grads)) {
    analytic.push_back(*t);
    if (name == options.corrupt_param) analytic.back() *= 1.01;
  }
  if (!options.corrupt_param.empty() &&
      std::none_of(refs.begin(), refs.end(), [&](const auto& r) { return r.name == options.corrupt_param; })) {
    throw ValueError("unknown parameter '" + options.corrupt_param + "'");
  }
  return check_gradients(objective, refs, analytic, options.step);
}

}  // namespace sfsr
