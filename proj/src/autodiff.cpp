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

#include "glyphstack/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

// ---------------------------------------------------------------- Parameter

Parameter::Parameter(std::string param_name, Tensor initial)
    : name(std::move(param_name)), value(std::move(initial)), grad(value.shape(), 0.0) {}

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) {
    grad = Tensor(value.shape(), 0.0);
  } else {
    grad.fill(0.0);
  }
}

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

void set_requires_grad(const ParameterList& params, bool enabled) {
  for (Parameter* p : params) p->requires_grad = enabled;
}

double global_grad_norm(const ParameterList& params) {
  double total = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.values()) total += g * g;
  }
  return std::sqrt(total);
}

// ---------------------------------------------------------------- Tape

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Parameter& p) {
  Node node;
  node.external_value = &p.value;
  node.needs_grad = recording() && p.requires_grad;
  if (node.needs_grad) {
    if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.shape(), 0.0);
    node.external_grad = &p.grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  const Node& node = nodes_[v.id()];
  return node.external_value ? *node.external_value : node.value;
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording()) {
    node.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                  [this](Var v) { return nodes_[v.id()].needs_grad; });
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_of(Var v) {
  Node& node = nodes_[v.id()];
  if (node.external_grad) return *node.external_grad;
  if (node.grad.empty()) node.grad = Tensor(value(v).shape(), 0.0);
  return node.grad;
}

void Tape::backward(Var output, double seed) {
  if (!recording()) throw Error("backward() on an inference-mode tape");
  if (value(output).size() != 1) throw ShapeError("backward() needs a 1x1 output");
  if (!nodes_[output.id()].needs_grad) return;
  grad_of(output)[0] += seed;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || !node.backward || node.grad.empty()) continue;
    node.backward(*this, node.grad, node.value);
    // Intermediate gradients are dead once propagated.
    node.grad = Tensor();
  }
}

// ---------------------------------------------------------------- Mask

AttentionMask::AttentionMask(std::size_t rows, std::size_t cols, bool visible)
    : rows_(rows), cols_(cols), bits_(rows * cols, visible ? 1 : 0) {}

AttentionMask AttentionMask::from_keys(std::size_t rows, const std::vector<bool>& key_visible) {
  AttentionMask mask(rows, key_visible.size(), false);
  for (std::size_t q = 0; q < rows; ++q)
    for (std::size_t k = 0; k < key_visible.size(); ++k) mask.set(q, k, key_visible[k]);
  return mask;
}

// ---------------------------------------------------------------- Ops

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner extents differ " + shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::matrix(m, n);
  kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape().push(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g, const Tensor&) {
    if (t.needs_grad(a)) kernels::gemm_nt(g.data(), t.value(b).data(), t.grad_of(a).data(), m, n, k);
    if (t.needs_grad(b)) kernels::gemm_tn(t.value(a).data(), g.data(), t.grad_of(b).data(), k, m, n);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  if (av.cols() != bv.cols()) {
    throw ShapeError("matmul_nt: inner extents differ " + shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()) + "^T");
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out = Tensor::matrix(m, n);
  kernels::gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape().push(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor& g, const Tensor&) {
    // out = a b^T, so da = g b and db = g^T a.
    if (t.needs_grad(a)) kernels::gemm_nn(g.data(), t.value(b).data(), t.grad_of(a).data(), m, n, k);
    if (t.needs_grad(b)) kernels::gemm_tn(g.data(), t.value(a).data(), t.grad_of(b).data(), n, m, k);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.tape().push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g, const Tensor&) {
    if (t.needs_grad(a)) accumulate(t.grad_of(a), g);
    if (t.needs_grad(b)) accumulate(t.grad_of(b), g);
  });
}

Var add_constant(Var a, const Tensor& c) {
  require_same_shape(a.value(), c, "add_constant");
  Tensor out = a.value();
  accumulate(out, c);
  return a.tape().push(std::move(out), {a}, [a](Tape& t, const Tensor& g, const Tensor&) {
    accumulate(t.grad_of(a), g);
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_rank2(av, "add_row");
  if (rv.size() != av.cols()) {
    throw ShapeError("add_row: row of " + std::to_string(rv.size()) + " values for " +
                     std::to_string(av.cols()) + " columns");
  }
  Tensor out = av;
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += rv[c];
  return a.tape().push(std::move(out), {a, row},
                       [a, row, rows, cols](Tape& t, const Tensor& g, const Tensor&) {
                         if (t.needs_grad(a)) accumulate(t.grad_of(a), g);
                         if (t.needs_grad(row)) {
                           Tensor& gr = t.grad_of(row);
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < cols; ++c) gr[c] += g(r, c);
                         }
                       });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().push(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g, const Tensor&) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  return a.tape().push(std::move(out), {a}, [a, s](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return a.tape().push(std::move(out), {a}, [a](Tape& t, const Tensor& g, const Tensor&) {
    const Tensor& av = t.value(a);
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (av[i] > 0.0) ga[i] += g[i];
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::tanh(v);
  return a.tape().push(std::move(out), {a}, [a](Tape& t, const Tensor& g, const Tensor& y) {
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  require_rank2(xv, "layer_norm");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  if (gv.size() != cols || bv.size() != cols) {
    throw ShapeError("layer_norm: gain/bias width does not match " + std::to_string(cols));
  }
  auto normalized = std::make_shared<Tensor>(Tensor::matrix(rows, cols));
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xv(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      const double xhat = (xv(r, c) - mean) * is;
      (*normalized)(r, c) = xhat;
      out(r, c) = xhat * gv[c] + bv[c];
    }
  }
  return x.tape().push(
      std::move(out), {x, gain, bias},
      [x, gain, bias, rows, cols, normalized, inv_std](Tape& t, const Tensor& g, const Tensor&) {
        const Tensor& gv = t.value(gain);
        const Tensor& xhat = *normalized;
        if (t.needs_grad(gain)) {
          Tensor& gg = t.grad_of(gain);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (t.needs_grad(bias)) {
          Tensor& gb = t.grad_of(bias);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
        }
        if (t.needs_grad(x)) {
          Tensor& gx = t.grad_of(x);
          const double inv_n = 1.0 / static_cast<double>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              const double d = g(r, c) * gv[c];
              mean_d += d;
              mean_dx += d * xhat(r, c);
            }
            mean_d *= inv_n;
            mean_dx *= inv_n;
            const double is = (*inv_std)[r];
            for (std::size_t c = 0; c < cols; ++c) {
              const double d = g(r, c) * gv[c];
              gx(r, c) += is * (d - mean_d - xhat(r, c) * mean_dx);
            }
          }
        }
      });
}

Var masked_softmax(Var scores, const AttentionMask& mask) {
  const Tensor& sv = scores.value();
  require_rank2(sv, "masked_softmax");
  const std::size_t rows = sv.rows(), cols = sv.cols();
  if (mask.rows() != rows || mask.cols() != cols) {
    throw ShapeError("masked_softmax: mask [" + std::to_string(mask.rows()) + "," +
                     std::to_string(mask.cols()) + "] does not cover scores " +
                     shape_string(sv.shape()));
  }
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c)
      if (mask.visible(r, c)) peak = std::max(peak, sv(r, c));
    if (peak == -std::numeric_limits<double>::infinity()) continue;  // fully masked row
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask.visible(r, c)) continue;
      const double e = std::exp(sv(r, c) - peak);
      out(r, c) = e;
      total += e;
    }
    const double inv = 1.0 / total;
    for (std::size_t c = 0; c < cols; ++c) out(r, c) *= inv;
  }
  return scores.tape().push(std::move(out), {scores},
                            [scores, rows, cols](Tape& t, const Tensor& g, const Tensor& p) {
                              Tensor& gs = t.grad_of(scores);
                              for (std::size_t r = 0; r < rows; ++r) {
                                double dot = 0.0;
                                for (std::size_t c = 0; c < cols; ++c) dot += g(r, c) * p(r, c);
                                for (std::size_t c = 0; c < cols; ++c)
                                  gs(r, c) += p(r, c) * (g(r, c) - dot);
                              }
                            });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_rank2(av, "slice_cols");
  if (begin + count > av.cols()) throw ShapeError("slice_cols: range past the last column");
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out = Tensor::matrix(rows, count);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(av.data() + r * cols + begin, count, out.data() + r * count);
  return a.tape().push(std::move(out), {a},
                       [a, begin, count, rows, cols](Tape& t, const Tensor& g, const Tensor&) {
                         Tensor& ga = t.grad_of(a);
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
                       });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  require_rank2(av, "slice_rows");
  if (begin + count > av.rows()) throw ShapeError("slice_rows: range past the last row");
  const std::size_t cols = av.cols();
  Tensor out = Tensor::matrix(count, cols);
  std::copy_n(av.data() + begin * cols, count * cols, out.data());
  return a.tape().push(std::move(out), {a}, [a, begin, cols](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& ga = t.grad_of(a);
    double* dst = ga.data() + begin * cols;
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out = Tensor::matrix(rows, total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& pv = parts[i].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * widths[i], widths[i], out.data() + r * total + offset);
    offset += widths[i];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().push(
      std::move(out), parts, [inputs, widths, rows, total](Tape& t, const Tensor& g, const Tensor&) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          if (t.needs_grad(inputs[i])) {
            Tensor& gi = t.grad_of(inputs[i]);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < widths[i]; ++c) gi(r, c) += g(r, offset + c);
          }
          offset += widths[i];
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t cols = parts[0].cols();
  std::vector<std::size_t> heights;
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    heights.push_back(p.rows());
    total += p.rows();
  }
  Tensor out = Tensor::matrix(total, cols);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor& pv = parts[i].value();
    std::copy_n(pv.data(), pv.size(), out.data() + offset * cols);
    offset += heights[i];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().push(
      std::move(out), parts, [inputs, heights, cols](Tape& t, const Tensor& g, const Tensor&) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          if (t.needs_grad(inputs[i])) {
            Tensor& gi = t.grad_of(inputs[i]);
            const double* src = g.data() + offset * cols;
            for (std::size_t j = 0; j < gi.size(); ++j) gi[j] += src[j];
          }
          offset += heights[i];
        }
      });
}

Var gather_rows(Var table, std::span<const std::uint32_t> indices, std::size_t per_row) {
  const Tensor& tv = table.value();
  require_rank2(tv, "gather_rows");
  if (per_row == 0 || indices.size() % per_row != 0) {
    throw ShapeError("gather_rows: index count is not a multiple of per_row");
  }
  const std::size_t width = tv.cols();
  const std::size_t rows = indices.size() / per_row;
  for (std::uint32_t idx : indices) {
    if (idx >= tv.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(idx) + " outside table of " +
                       std::to_string(tv.rows()) + " rows");
    }
  }
  Tensor out = Tensor::matrix(rows, per_row * width);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::copy_n(tv.data() + indices[i] * width, width, out.data() + i * width);
  std::vector<std::uint32_t> saved(indices.begin(), indices.end());
  return table.tape().push(std::move(out), {table},
                           [table, saved, width](Tape& t, const Tensor& g, const Tensor&) {
                             Tensor& gt = t.grad_of(table);
                             for (std::size_t i = 0; i < saved.size(); ++i) {
                               double* dst = gt.data() + saved[i] * width;
                               const double* src = g.data() + i * width;
                               for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
                             }
                           });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().push(Tensor::scalar(total), {a}, [a](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& ga = t.grad_of(a);
    for (double& v : ga.values()) v += g[0];
  });
}

Var weighted_sum(Var a, const Tensor& weights) {
  require_same_shape(a.value(), weights, "weighted_sum");
  double total = 0.0;
  const Tensor& av = a.value();
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * weights[i];
  return a.tape().push(Tensor::scalar(total), {a},
                       [a, weights](Tape& t, const Tensor& g, const Tensor&) {
                         Tensor& ga = t.grad_of(a);
                         for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0] * weights[i];
                       });
}

Var sum_squares(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v * v;
  return a.tape().push(Tensor::scalar(total), {a}, [a](Tape& t, const Tensor& g, const Tensor&) {
    const Tensor& av = t.value(a);
    Tensor& ga = t.grad_of(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * g[0] * av[i];
  });
}

Var mse_rows(Var pred, std::size_t row_begin, const Tensor& target) {
  const Tensor& pv = pred.value();
  require_rank2(pv, "mse_rows");
  require_rank2(target, "mse_rows");
  if (pv.cols() != target.cols() || row_begin + target.rows() > pv.rows()) {
    throw ShapeError("mse_rows: target " + shape_string(target.shape()) + " at row " +
                     std::to_string(row_begin) + " does not fit prediction " +
                     shape_string(pv.shape()));
  }
  const std::size_t cols = pv.cols();
  const double* base = pv.data() + row_begin * cols;
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = base[i] - target[i];
    total += d * d;
  }
  const double inv_count = 1.0 / static_cast<double>(target.size());
  return pred.tape().push(
      Tensor::scalar(total * inv_count), {pred},
      [pred, row_begin, cols, target, inv_count](Tape& t, const Tensor& g, const Tensor&) {
        const double* base = t.value(pred).data() + row_begin * cols;
        double* dst = t.grad_of(pred).data() + row_begin * cols;
        for (std::size_t i = 0; i < target.size(); ++i)
          dst[i] += g[0] * 2.0 * (base[i] - target[i]) * inv_count;
      });
}

}  // namespace glyphstack
