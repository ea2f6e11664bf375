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
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "glyphstack/parameter.hpp"
#include "glyphstack/tensor.hpp"

namespace glyphstack {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording of a computation. A tape in inference mode stores
// values only, so the same forward code serves training and generation.
class Tape {
 public:
  enum class Mode { kRecord, kInference };
  // Receives the node's accumulated gradient and its forward value.
  using Backward = std::function<void(Tape&, const Tensor& out_grad, const Tensor& out_value)>;

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  Var constant(Tensor value);
  // Leaf reading p.value in place; backward accumulates into p.grad.
  Var leaf(Parameter& p);

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  // Seeds d(output)/d(output) = seed for a 1x1 output and runs the tape.
  void backward(Var output, double seed = 1.0);

  // Op plumbing.
  Var push(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Tensor value, std::span<const Var> inputs, Backward backward);
  Tensor& grad_of(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    Backward backward;
    bool needs_grad = false;
  };

  Mode mode_;
  std::vector<Node> nodes_;
};

// Binary attention mask: visible(q, k) == false excludes key k from query q.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t rows, std::size_t cols, bool visible = true);

  // Every query sees exactly the keys flagged visible.
  static AttentionMask from_keys(std::size_t rows, const std::vector<bool>& key_visible);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool visible(std::size_t q, std::size_t k) const { return bits_[q * cols_ + k] != 0; }
  void set(std::size_t q, std::size_t k, bool visible) { bits_[q * cols_ + k] = visible ? 1 : 0; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Differentiable operations. All operate on rank-2 values.
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_constant(Var a, const Tensor& c);
Var add_row(Var a, Var row);  // broadcast a 1 x cols row over every row of a
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var tanh(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
// Row-wise softmax over visible keys. Hidden keys get exactly zero weight;
// a row with no visible key yields an all-zero row.
Var masked_softmax(Var scores, const AttentionMask& mask);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
// Output row r is the concatenation of table rows
// indices[r * per_row .. r * per_row + per_row - 1].
Var gather_rows(Var table, std::span<const std::uint32_t> indices, std::size_t per_row);
Var sum(Var a);
Var weighted_sum(Var a, const Tensor& weights);
Var sum_squares(Var a);
// Mean squared error between rows [row_begin, row_begin + target.rows())
// of `pred` and `target`.
Var mse_rows(Var pred, std::size_t row_begin, const Tensor& target);

}  // namespace glyphstack
