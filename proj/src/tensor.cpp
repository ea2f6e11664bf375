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

#include "glyphstack/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "glyphstack/error.hpp"

namespace glyphstack {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  const std::size_t count =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  values_.assign(count, fill);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("matrix: " + std::to_string(values.size()) + " values for shape [" +
                     std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
  Tensor t;
  t.shape_ = {rows, cols};
  t.values_ = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value) { return matrix(1, 1, value); }

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("rows(): tensor is not rank 2: " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("cols(): tensor is not rank 2: " + shape_string(shape_));
  return shape_[1];
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void check_finite(const Tensor& t, std::string_view where) {
  if (!t.all_finite()) {
    throw NumericFault("non-finite value in " + std::string(where));
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

namespace kernels {

// Rows are processed in groups of four so each loaded row of b feeds four accumulators. The
// summation order over p matches the untiled loop, so results are bitwise identical.
void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict out,
             std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* o0 = out + i * n;
    double* o1 = o0 + n;
    double* o2 = o1 + n;
    double* o3 = o2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s0 = a0[p], s1 = a0[k + p], s2 = a0[2 * k + p], s3 = a0[3 * k + p];
      if (s0 == 0.0 && s1 == 0.0 && s2 == 0.0 && s3 == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = b_row[j];
        o0[j] += s0 * bv;
        o1[j] += s1 * bv;
        o2[j] += s2 * bv;
        o3[j] += s3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* out_row = out + i * n;
    const double* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double scale = a_row[p];
      if (scale == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += scale * b_row[j];
    }
  }
}

void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict out,
             std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* o0 = out + i * n;
    double* o1 = o0 + n;
    double* o2 = o1 + n;
    double* o3 = o2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* a_row = a + p * m + i;
      const double s0 = a_row[0], s1 = a_row[1], s2 = a_row[2], s3 = a_row[3];
      if (s0 == 0.0 && s1 == 0.0 && s2 == 0.0 && s3 == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = b_row[j];
        o0[j] += s0 * bv;
        o1[j] += s1 * bv;
        o2[j] += s2 * bv;
        o3[j] += s3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* out_row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double scale = a[p * m + i];
      if (scale == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += scale * b_row[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
             std::size_t n) {
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(a, bt.data(), out, m, k, n);
}

}  // namespace kernels

}  // namespace glyphstack
