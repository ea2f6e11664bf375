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

#include "glyphstack/transformer.hpp"

#include <cmath>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  Tensor t = Tensor::matrix(fan_in, fan_out);
  for (double& v : t.values()) v = uniform(rng);
  return t;
}

Parameter weight(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                 std::mt19937_64& rng) {
  return Parameter(name, xavier(fan_in, fan_out, rng));
}

Parameter zeros(const std::string& name, std::size_t width) {
  return Parameter(name, Tensor::matrix(1, width, 0.0));
}

void append(ParameterList& out, AttentionParams& a) {
  for (Parameter* p : {&a.wq, &a.bq, &a.wk, &a.bk, &a.wv, &a.bv, &a.wo, &a.bo}) out.push_back(p);
}

void append(ParameterList& out, FeedForwardParams& f) {
  for (Parameter* p : {&f.w1, &f.b1, &f.w2, &f.b2}) out.push_back(p);
}

void append(ParameterList& out, NormParams& n) {
  out.push_back(&n.gain);
  out.push_back(&n.bias);
}

void require_width(Var x, std::size_t d_model, const char* where) {
  if (x.value().rank() != 2 || x.cols() != d_model) {
    throw ShapeError(std::string(where) + ": expected width " + std::to_string(d_model) + ", got " +
                     shape_string(x.value().shape()));
  }
  if (x.rows() == 0) throw ShapeError(std::string(where) + ": empty sequence");
}

Var with_positions(Var tokens, std::span<const std::size_t> positions) {
  if (positions.size() != tokens.rows()) {
    throw ShapeError("positions: " + std::to_string(positions.size()) + " for " +
                     std::to_string(tokens.rows()) + " tokens");
  }
  return add_constant(tokens, positional_rows(positions, tokens.cols()));
}

}  // namespace

void StackConfig::validate() const {
  if (d_model == 0 || heads == 0 || encoder_layers == 0 || decoder_layers == 0) {
    throw DataError("stack config: extents must be positive");
  }
  if (d_model % heads != 0) {
    throw DataError("stack config: d_model " + std::to_string(d_model) +
                    " is not divisible by heads " + std::to_string(heads));
  }
  if (d_model % 2 != 0) throw DataError("stack config: d_model must be even");
}

AttentionParams make_attention_params(std::size_t d, const std::string& prefix,
                                      std::mt19937_64& rng) {
  AttentionParams a;
  a.wq = weight(prefix + ".wq", d, d, rng);
  a.bq = zeros(prefix + ".bq", d);
  a.wk = weight(prefix + ".wk", d, d, rng);
  a.bk = zeros(prefix + ".bk", d);
  a.wv = weight(prefix + ".wv", d, d, rng);
  a.bv = zeros(prefix + ".bv", d);
  a.wo = weight(prefix + ".wo", d, d, rng);
  a.bo = zeros(prefix + ".bo", d);
  return a;
}

FeedForwardParams make_feed_forward_params(std::size_t d, std::size_t width,
                                           const std::string& prefix, std::mt19937_64& rng) {
  FeedForwardParams f;
  f.w1 = weight(prefix + ".w1", d, width, rng);
  f.b1 = zeros(prefix + ".b1", width);
  f.w2 = weight(prefix + ".w2", width, d, rng);
  f.b2 = zeros(prefix + ".b2", d);
  return f;
}

NormParams make_norm_params(std::size_t d, const std::string& prefix) {
  return {Parameter(prefix + ".gain", Tensor::matrix(1, d, 1.0)), zeros(prefix + ".bias", d)};
}

StackParams::StackParams(const StackConfig& cfg, std::size_t output_dim,
                         const std::string& prefix, std::mt19937_64& rng)
    : config_(cfg) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  const std::size_t ff = cfg.feed_forward_width();
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = prefix + ".enc" + std::to_string(l);
    encoder.push_back({make_attention_params(d, p + ".attn", rng), make_norm_params(d, p + ".ln1"),
                       make_feed_forward_params(d, ff, p + ".ff", rng),
                       make_norm_params(d, p + ".ln2")});
  }
  for (std::size_t l = 0; l < cfg.decoder_layers; ++l) {
    const std::string p = prefix + ".dec" + std::to_string(l);
    decoder.push_back({make_attention_params(d, p + ".self", rng), make_norm_params(d, p + ".ln1"),
                       make_attention_params(d, p + ".cross", rng),
                       make_norm_params(d, p + ".ln2"),
                       make_feed_forward_params(d, ff, p + ".ff", rng),
                       make_norm_params(d, p + ".ln3")});
  }
  generator_w = weight(prefix + ".gen.w", d, output_dim, rng);
  generator_b = zeros(prefix + ".gen.b", output_dim);
}

ParameterList StackParams::parameters() {
  ParameterList out;
  for (EncoderLayerParams& l : encoder) {
    append(out, l.attention);
    append(out, l.norm1);
    append(out, l.feed_forward);
    append(out, l.norm2);
  }
  for (DecoderLayerParams& l : decoder) {
    append(out, l.self_attention);
    append(out, l.norm1);
    append(out, l.cross_attention);
    append(out, l.norm2);
    append(out, l.feed_forward);
    append(out, l.norm3);
  }
  out.push_back(&generator_w);
  out.push_back(&generator_b);
  return out;
}

// ---------------------------------------------------------------- positions

Tensor positional_encoding(std::size_t length, std::size_t dim) {
  std::vector<std::size_t> positions(length);
  for (std::size_t i = 0; i < length; ++i) positions[i] = i;
  return positional_rows(positions, dim);
}

Tensor positional_rows(std::span<const std::size_t> positions, std::size_t dim) {
  if (positions.empty() || dim == 0 || dim % 2 != 0) {
    throw DataError("positional encoding needs a positive length and an even dimension");
  }
  Tensor out = Tensor::matrix(positions.size(), dim);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const double pos = static_cast<double>(positions[r]);
    for (std::size_t i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
      out(r, 2 * i) = std::sin(pos * freq);
      out(r, 2 * i + 1) = std::cos(pos * freq);
    }
  }
  return out;
}

std::vector<std::size_t> glyph_positions(std::size_t glyphs, std::size_t per_glyph) {
  std::vector<std::size_t> out;
  out.reserve(glyphs * per_glyph);
  for (std::size_t g = 0; g < glyphs; ++g)
    for (std::size_t i = 0; i < per_glyph; ++i) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- masks

std::vector<bool> visible_keys(const std::vector<bool>& blank_flags) {
  std::vector<bool> out(blank_flags.size());
  for (std::size_t i = 0; i < blank_flags.size(); ++i) out[i] = !blank_flags[i];
  return out;
}

AttentionMask encoder_mask(const std::vector<bool>& blank_flags) {
  return AttentionMask::from_keys(blank_flags.size(), visible_keys(blank_flags));
}

AttentionMask cross_mask(std::size_t queries, const std::vector<bool>& memory_blank) {
  return AttentionMask::from_keys(queries, visible_keys(memory_blank));
}

AttentionMask parallel_self_mask(const std::vector<bool>& source_blank) {
  const std::size_t n = source_blank.size();
  AttentionMask mask(2 * n, 2 * n, false);
  for (std::size_t q = 0; q < 2 * n; ++q)
    for (std::size_t k = 0; k < n; ++k) mask.set(q, k, !source_blank[k]);
  return mask;
}

AttentionMask serial_self_mask(const std::vector<bool>& source_blank,
                               const std::vector<bool>& target_blank) {
  const std::size_t n = source_blank.size();
  const std::size_t total = n + target_blank.size();
  AttentionMask mask(total, total, false);
  for (std::size_t q = 0; q < total; ++q) {
    for (std::size_t k = 0; k < n; ++k) mask.set(q, k, !source_blank[k]);
    if (q < n) continue;
    for (std::size_t k = n; k <= q; ++k) mask.set(q, k, !target_blank[k - n]);
  }
  return mask;
}

// ---------------------------------------------------------------- blocks

Var affine(Var x, Parameter& w, Parameter& b) {
  Tape& t = x.tape();
  return add_row(matmul(x, t.leaf(w)), t.leaf(b));
}

Var feed_forward(Var x, FeedForwardParams& p) {
  return affine(relu(affine(x, p.w1, p.b1)), p.w2, p.b2);
}

Var norm(Var x, NormParams& p) {
  Tape& t = x.tape();
  return layer_norm(x, t.leaf(p.gain), t.leaf(p.bias));
}

Var multi_head_attention(Var queries, Var keys, Var values, const AttentionMask& mask,
                         AttentionParams& p, std::size_t heads) {
  const std::size_t d = p.wq.value.rows();
  if (heads == 0 || d % heads != 0) throw ShapeError("attention: heads do not divide d_model");
  require_width(queries, d, "attention queries");
  require_width(keys, d, "attention keys");
  require_width(values, d, "attention values");
  if (keys.rows() != values.rows()) throw ShapeError("attention: key/value lengths differ");
  if (mask.rows() != queries.rows() || mask.cols() != keys.rows()) {
    throw ShapeError("attention: mask [" + std::to_string(mask.rows()) + "," +
                     std::to_string(mask.cols()) + "] does not cover " +
                     std::to_string(queries.rows()) + " queries x " + std::to_string(keys.rows()) +
                     " keys");
  }
  const std::size_t dk = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Var q = affine(queries, p.wq, p.bq);
  Var k = affine(keys, p.wk, p.bk);
  Var v = affine(values, p.wv, p.bv);
  std::vector<Var> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = slice_cols(q, h * dk, dk);
    Var kh = slice_cols(k, h * dk, dk);
    Var vh = slice_cols(v, h * dk, dk);
    Var weights = masked_softmax(scale(matmul_nt(qh, kh), inv_scale), mask);
    outputs.push_back(matmul(weights, vh));
  }
  Var joined = heads == 1 ? outputs[0] : concat_cols(outputs);
  return affine(joined, p.wo, p.bo);
}

Var encode(Var tokens, std::span<const std::size_t> positions, const AttentionMask& mask,
           StackParams& params) {
  const StackConfig& cfg = params.config();
  require_width(tokens, cfg.d_model, "encoder input");
  Var x = with_positions(tokens, positions);
  for (EncoderLayerParams& layer : params.encoder) {
    x = norm(add(x, multi_head_attention(x, x, x, mask, layer.attention, cfg.heads)), layer.norm1);
    x = norm(add(x, feed_forward(x, layer.feed_forward)), layer.norm2);
  }
  return x;
}

Var decode(Var tokens, std::span<const std::size_t> positions, Var memory,
           const AttentionMask& self_mask, const AttentionMask& memory_mask,
           StackParams& params) {
  const StackConfig& cfg = params.config();
  require_width(tokens, cfg.d_model, "decoder input");
  require_width(memory, cfg.d_model, "decoder memory");
  Var x = with_positions(tokens, positions);
  for (DecoderLayerParams& layer : params.decoder) {
    x = norm(add(x, multi_head_attention(x, x, x, self_mask, layer.self_attention, cfg.heads)),
             layer.norm1);
    x = norm(add(x, multi_head_attention(x, memory, memory, memory_mask, layer.cross_attention,
                                         cfg.heads)),
             layer.norm2);
    x = norm(add(x, feed_forward(x, layer.feed_forward)), layer.norm3);
  }
  return x;
}

Var generate_patches(Var hidden, StackParams& params) {
  require_width(hidden, params.config().d_model, "generator input");
  return tanh(affine(hidden, params.generator_w, params.generator_b));
}

// ---------------------------------------------------------------- wrappers

Tensor encoder_forward(std::span<const GlyphSequence> sequences, StackParams& params) {
  if (sequences.empty()) throw ShapeError("encoder_forward: empty sequence");
  Tape tape(Tape::Mode::kInference);
  std::vector<Var> parts;
  std::vector<bool> blank;
  std::vector<std::size_t> positions;
  for (const GlyphSequence& seq : sequences) {
    if (seq.blank_flags.size() != seq.tokens.rows()) {
      throw ShapeError("encoder_forward: blank flags do not match token count");
    }
    parts.push_back(tape.constant(seq.tokens));
    blank.insert(blank.end(), seq.blank_flags.begin(), seq.blank_flags.end());
    for (std::size_t i = 0; i < seq.tokens.rows(); ++i) positions.push_back(i);
  }
  Var tokens = parts.size() == 1 ? parts[0] : concat_rows(parts);
  return encode(tokens, positions, encoder_mask(blank), params).value();
}

Tensor decoder_forward(const Tensor& tokens, std::span<const std::size_t> positions,
                       const Tensor& memory, const AttentionMask& self_mask,
                       const AttentionMask& memory_mask, StackParams& params) {
  Tape tape(Tape::Mode::kInference);
  return decode(tape.constant(tokens), positions, tape.constant(memory), self_mask, memory_mask,
                params)
      .value();
}

Tensor generate_patches(const Tensor& hidden, StackParams& params) {
  Tape tape(Tape::Mode::kInference);
  return generate_patches(tape.constant(hidden), params).value();
}

}  // namespace glyphstack
