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

#include <random>

#include "glyphstack/codec.hpp"
#include "glyphstack/image.hpp"
#include "glyphstack/pipeline.hpp"
#include "glyphstack/tensor.hpp"

namespace glyphstack::testing {

inline GlyphImage random_image(std::size_t h, std::size_t w, std::mt19937_64& rng, double density = 0.5) {
  std::bernoulli_distribution ink(density);
  GlyphImage g(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) g.set(r, c, ink(rng));
  return g;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

// Clears block b (row-major over the image).
inline void clear_block(GlyphImage& g, const ChunkConfig& cfg, std::size_t b) {
  const std::size_t r0 = (b / cfg.blocks_per_row()) * cfg.block;
  const std::size_t c0 = (b % cfg.blocks_per_row()) * cfg.block;
  for (std::size_t r = 0; r < cfg.block; ++r)
    for (std::size_t c = 0; c < cfg.block; ++c) g.set(r0 + r, c0 + c, false);
}

// 16x16 glyphs in 8x8 blocks of 4x4 patches: N = 4, d_token 16 + 4 + 4 + 8.
inline ModelConfig small_model_config(std::size_t layers = 1) {
  ModelConfig cfg;
  cfg.chunk = {16, 16, 8, 4, 4};
  cfg.dims = {4, 4, 2};
  cfg.style_rows = 3;
  cfg.chars = 6;
  StackConfig s;
  s.d_model = cfg.d_token();
  s.encoder_layers = s.decoder_layers = layers;
  s.heads = 4;
  cfg.parallel = cfg.serial = s;
  return cfg;
}

inline GlyphMeta meta(std::size_t style, std::size_t ch) {
  return {style, ch, {static_cast<std::uint8_t>(ch % 26), 1, 2, static_cast<std::uint8_t>(style % 26)}};
}

inline SynthesisTask random_task(const ChunkConfig& cfg, std::mt19937_64& rng, std::size_t k = 2,
                                 std::size_t style = 1, std::size_t ch = 1) {
  SynthesisTask task;
  task.target = meta(style, ch);
  task.source = random_image(cfg.height, cfg.width, rng, 0.3);
  for (std::size_t i = 0; i < k; ++i) {
    task.references.push_back({random_image(cfg.height, cfg.width, rng, 0.3), meta(style, ch + 1 + i)});
  }
  task.ground_truth = random_image(cfg.height, cfg.width, rng, 0.3);
  return task;
}

}  // namespace glyphstack::testing
