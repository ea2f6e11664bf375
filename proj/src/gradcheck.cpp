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

#include "glyphstack/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

double evaluate(const ScalarFunction& f) {
  Tape tape(Tape::Mode::kInference);
  Var out = f(tape);
  if (out.value().size() != 1) throw ShapeError("finite_diff_check: function is not scalar");
  return out.value()[0];
}

}  // namespace

GradCheckResult finite_diff_check(const ScalarFunction& f, const ParameterList& params,
                                  double step, double floor) {
  zero_grads(params);
  {
    Tape tape;
    Var out = f(tape);
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  GradCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double original = p.value[j];
      p.value[j] = original + step;
      const double plus = evaluate(f);
      p.value[j] = original - step;
      const double minus = evaluate(f);
      p.value[j] = original;

      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || result.coordinates == 1) {
        result.max_rel_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = j;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  zero_grads(params);
  return result;
}

}  // namespace glyphstack
