// Copyright 2026 The glyphstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "glyphstack/autodiff.hpp"

namespace glyphstack {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Builds a scalar (1x1) on the given tape from the current parameter values.
using ScalarFunction = std::function<Var(Tape&)>;

// Compares reverse-mode gradients of `f` with central differences of step
// `step` over every coordinate of `params`. The relative error of one
// coordinate is |a - n| / max(|a|, |n|, floor); the floor keeps coordinates
// whose true gradient is ~0 from being judged on rounding noise alone.
GradCheckResult finite_diff_check(const ScalarFunction& f, const ParameterList& params,
                                  double step = 1e-6, double floor = 1e-6);

}  // namespace glyphstack
