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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "glyphstack/autodiff.hpp"
#include "glyphstack/codec.hpp"

namespace glyphstack {

struct StackConfig {
  std::size_t d_model = 448;
  std::size_t encoder_layers = 6;
  std::size_t decoder_layers = 6;
  std::size_t heads = 8;
  std::size_t ff_width = 0;  // 0 selects 4 * d_model

  std::size_t feed_forward_width() const { return ff_width ? ff_width : 4 * d_model; }
  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;

  bool operator==(const StackConfig&) const = default;
};

struct AttentionParams {
  Parameter wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FeedForwardParams {
  Parameter w1, b1, w2, b2;
};

struct NormParams {
  Parameter gain, bias;
};

struct EncoderLayerParams {
  AttentionParams attention;
  NormParams norm1;
  FeedForwardParams feed_forward;
  NormParams norm2;
};

struct DecoderLayerParams {
  AttentionParams self_attention;
  NormParams norm1;
  AttentionParams cross_attention;
  NormParams norm2;
  FeedForwardParams feed_forward;
  NormParams norm3;
};

// All weights of one encoder/decoder stack plus its Linear+Tanh generator.
class StackParams {
 public:
  StackParams() = default;
  // Weights are Xavier-uniform, biases zero, layer-norm gains one.
  StackParams(const StackConfig& cfg, std::size_t output_dim, const std::string& prefix,
              std::mt19937_64& rng);

  const StackConfig& config() const { return config_; }
  std::size_t output_dim() const { return generator_w.value.cols(); }

  // Stable declaration order; checkpoints depend on it.
  ParameterList parameters();

  std::vector<EncoderLayerParams> encoder;
  std::vector<DecoderLayerParams> decoder;
  Parameter generator_w;
  Parameter generator_b;

 private:
  StackConfig config_;
};

AttentionParams make_attention_params(std::size_t d_model, const std::string& prefix,
                                      std::mt19937_64& rng);
FeedForwardParams make_feed_forward_params(std::size_t d_model, std::size_t width,
                                           const std::string& prefix, std::mt19937_64& rng);
NormParams make_norm_params(std::size_t d_model, const std::string& prefix);

// Sinusoidal table: row p, column 2i = sin(p / 10000^(2i/d)), 2i+1 = cos(...).
Tensor positional_encoding(std::size_t length, std::size_t dim);
// Rows of the sinusoidal table for arbitrary positions.
Tensor positional_rows(std::span<const std::size_t> positions, std::size_t dim);
// 0..per_glyph-1 repeated for each glyph of a concatenated sequence.
std::vector<std::size_t> glyph_positions(std::size_t glyphs, std::size_t per_glyph);

// ---- masks. `true` means the key is visible.
std::vector<bool> visible_keys(const std::vector<bool>& blank_flags);
// Encoder: blank keys hidden from every query.
AttentionMask encoder_mask(const std::vector<bool>& blank_flags);
// Cross attention: queries see every non-blank memory position.
AttentionMask cross_mask(std::size_t queries, const std::vector<bool>& memory_blank);
// Parallel decoder over [source | blank target]: every query sees the
// non-blank source keys; the blank target half is hidden.
AttentionMask parallel_self_mask(const std::vector<bool>& source_blank);
// Serial decoder over [source | shifted target]: source queries see non-blank
// source keys; target query i additionally sees non-blank target keys <= i.
AttentionMask serial_self_mask(const std::vector<bool>& source_blank,
                               const std::vector<bool>& target_blank);

// ---- differentiable building blocks
Var affine(Var x, Parameter& weight, Parameter& bias);
Var feed_forward(Var x, FeedForwardParams& params);
Var norm(Var x, NormParams& params);
// Scaled dot-product attention per head (1/sqrt(d_k)), heads concatenated,
// then projected.
Var multi_head_attention(Var queries, Var keys, Var values, const AttentionMask& mask,
                         AttentionParams& params, std::size_t heads);

Var encode(Var tokens, std::span<const std::size_t> positions, const AttentionMask& mask,
           StackParams& params);
Var decode(Var tokens, std::span<const std::size_t> positions, Var memory,
           const AttentionMask& self_mask, const AttentionMask& memory_mask,
           StackParams& params);
Var generate_patches(Var hidden, StackParams& params);

// ---- value-level wrappers
// Encodes concatenated glyph sequences; the mask comes from their blank flags.
Tensor encoder_forward(std::span<const GlyphSequence> sequences, StackParams& params);
Tensor decoder_forward(const Tensor& tokens, std::span<const std::size_t> positions,
                       const Tensor& memory, const AttentionMask& self_mask,
                       const AttentionMask& memory_mask, StackParams& params);
Tensor generate_patches(const Tensor& hidden, StackParams& params);

}  // namespace glyphstack
