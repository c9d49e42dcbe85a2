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

#include "sfsr/gradcheck.hpp"
#include "sfsr/model.hpp"

#include <cstdint>
#include <string>

namespace sfsr {

struct ModelCheckOptions {
  std::uint64_t seed = 0;
  Index input_size = 8;  // input is [1, 3, size, size]
  double step = kGradCheckStep;
  /// Test hook: scale the analytic gradient of this parameter by 1.01.
  std::string corrupt_param;
};

/// End-to-end finite-difference check of the full network in 64-bit.
///
/// Every parameter (biases and norms included) is redrawn at unit-ish scale
/// so no gradient is trivially zero, and the scalar objective is a fixed
/// random linear functional of the training-mode output.
GradCheckReport check_model_gradients(const ModelConfig& config, const ModelCheckOptions& options = {});

}  // namespace sfsr
