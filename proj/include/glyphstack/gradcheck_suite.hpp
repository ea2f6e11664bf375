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

#include <cstdint>
#include <string>
#include <vector>

#include "glyphstack/gradcheck.hpp"

namespace glyphstack {

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
  bool passed = false;
};

// Central-difference checks of matmul, layer norm, feed-forward, masked
// attention and both stages of a 2-layer miniature model, all in 64-bit.
// Losses are O(1), so step 1e-6 leaves ~1e-9 of rounding noise in each
// numeric derivative; `floor` keeps near-zero coordinates from being judged
// on that noise.
std::vector<GradCheckCase> run_gradcheck_suite(double tolerance = 1e-5, double step = 1e-6,
                                               double floor = 1e-3, std::uint64_t seed = 7);

}  // namespace glyphstack
