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
#include <vector>

#include "glyphstack/parameter.hpp"

namespace glyphstack {

// Moment accumulators for one ordered parameter list.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  static AdamState for_params(const ParameterList& params, double beta1 = 0.9,
                              double beta2 = 0.98, double eps = 1e-8);
};

// One bias-corrected Adam step over `params` using their current grads.
// Pinned rows keep their value and their moments. Throws NumericFault on a
// non-finite gradient before touching anything.
void adam_update(const ParameterList& params, AdamState& state, double lr);

// Rescales all grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const ParameterList& params, double max_norm);

}  // namespace glyphstack
