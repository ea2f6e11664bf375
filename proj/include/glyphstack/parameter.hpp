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
#include <string>
#include <vector>

#include "glyphstack/tensor.hpp"

namespace glyphstack {

// A trainable tensor plus its gradient accumulator. Rows listed in
// `pinned_rows` are never touched by the optimizer (codebook entry 0).
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool requires_grad = true;
  std::vector<std::size_t> pinned_rows;

  Parameter() = default;
  Parameter(std::string param_name, Tensor initial);

  void zero_grad();
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);
void set_requires_grad(const ParameterList& params, bool enabled);
double global_grad_norm(const ParameterList& params);

}  // namespace glyphstack
