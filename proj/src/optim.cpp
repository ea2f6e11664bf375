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

#include "glyphstack/optim.hpp"

#include <cmath>

#include "glyphstack/error.hpp"

namespace glyphstack {

AdamState AdamState::for_params(const ParameterList& params, double beta1, double beta2,
                                double eps) {
  AdamState state;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.eps = eps;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value.shape(), 0.0);
    state.second_moment.emplace_back(p->value.shape(), 0.0);
  }
  return state;
}

void adam_update(const ParameterList& params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw UsageError("adam_update: learning rate must be positive");
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adam_update: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (!p.grad.same_shape(p.value) || !state.first_moment[i].same_shape(p.value)) {
      throw ShapeError("adam_update: shape mismatch for " + p.name);
    }
    if (!p.grad.all_finite()) throw NumericFault("non-finite gradient in " + p.name);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const std::size_t n = p.value.size();
    std::vector<bool> pinned;
    if (!p.pinned_rows.empty()) {
      pinned.assign(n, false);
      const std::size_t width = p.value.rank() == 2 ? p.value.cols() : n;
      for (std::size_t row : p.pinned_rows)
        for (std::size_t c = 0; c < width; ++c) pinned[row * width + c] = true;
    }
    double* value = p.value.data();
    const double* grad = p.grad.data();
    double* m1 = m.data();
    double* m2 = v.data();
    for (std::size_t j = 0; j < n; ++j) {
      if (!pinned.empty() && pinned[j]) continue;
      const double g = grad[j];
      m1[j] = state.beta1 * m1[j] + (1.0 - state.beta1) * g;
      m2[j] = state.beta2 * m2[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m1[j] / correction1;
      const double v_hat = m2[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad.values()) g *= factor;
  }
  return norm;
}

}  // namespace glyphstack
