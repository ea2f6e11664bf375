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

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glyphstack/autodiff.hpp"
#include "glyphstack/image.hpp"
#include "glyphstack/parameter.hpp"

namespace glyphstack {

// Tokenization geometry: an H x W image is cut into B x B blocks, each block
// into P x P patches; every patch maps to one of 2^(P*P) codebook entries of
// patch_dim (L_c) values.
struct ChunkConfig {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t block = 8;
  std::size_t patch = 4;
  std::size_t patch_dim = 4;

  // Throws DataError on a geometry that does not tile.
  void validate() const;

  std::size_t blocks_per_row() const { return width / block; }
  std::size_t tokens() const { return (height / block) * (width / block); }
  std::size_t patches_per_side() const { return block / patch; }
  std::size_t patches_per_block() const { return patches_per_side() * patches_per_side(); }
  std::size_t block_pixels() const { return block * block; }
  std::size_t patch_pixels() const { return patch * patch; }
  std::size_t token_dim() const { return patches_per_block() * patch_dim; }
  std::size_t codebook_size() const { return std::size_t{1} << patch_pixels(); }

  static ChunkConfig toy() { return {32, 32, 8, 4, 4}; }
  static ChunkConfig res256() { return {256, 256, 16, 4, 16}; }
  static ChunkConfig res1024() { return {1024, 1024, 64, 4, 2}; }

  bool operator==(const ChunkConfig&) const = default;
};

// Style / content / wubi identity of one glyph. style_id 0 is the source font.
struct GlyphMeta {
  std::size_t style_id = 0;
  std::size_t char_id = 1;
  std::array<std::uint8_t, 4> wubi{};

  // Parses a 4-letter lowercase code; anything else is a DataError.
  static std::array<std::uint8_t, 4> parse_wubi(std::string_view code);
  static std::string format_wubi(const std::array<std::uint8_t, 4>& wubi);
};

// Patch indices of every block of one image, blocks row-major over the image
// and patches row-major within a block.
struct ChunkedGlyph {
  std::size_t blocks = 0;
  std::size_t patches_per_block = 0;
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> block(std::size_t b) const {
    return {indices.data() + b * patches_per_block, patches_per_block};
  }
  bool block_blank(std::size_t b) const;
  std::vector<bool> blank_flags() const;
};

// Row-major pixel order, first pixel is the least-significant bit.
std::uint32_t patch_to_index(const GlyphImage& patch, std::size_t patch_side);
GlyphImage index_to_patch(std::uint32_t index, std::size_t patch_side);

ChunkedGlyph chunk_image(const GlyphImage& image, const ChunkConfig& cfg);
GlyphImage assemble_image(const ChunkedGlyph& chunks, const ChunkConfig& cfg);

// Patch indices of a single block given as B*B row-major pixels.
std::vector<std::uint32_t> chunk_block_pixels(std::span<const std::uint8_t> block_pixels,
                                              const ChunkConfig& cfg);

// 2^(P*P) x L_c table; entry 0 is the all-zero vector and is pinned.
class Codebook {
 public:
  Codebook() = default;
  Codebook(const ChunkConfig& cfg, std::mt19937_64& rng);

  Parameter& table() { return table_; }
  const Parameter& table() const { return table_; }
  std::size_t entries() const { return table_.value.rows(); }
  std::size_t entry_dim() const { return table_.value.cols(); }

 private:
  Parameter table_;
};

struct EmbeddingDims {
  std::size_t style = 16;
  std::size_t content = 16;
  std::size_t wubi = 4;

  std::size_t d_token(const ChunkConfig& cfg) const {
    return cfg.token_dim() + style + content + 4 * wubi;
  }
  bool operator==(const EmbeddingDims&) const = default;
};

// Style rows are indexed by style_id (row 0 = source font), content rows by
// char_id - 1, wubi rows by letter.
class EmbeddingTables {
 public:
  static constexpr std::size_t kWubiLetters = 26;

  EmbeddingTables() = default;
  EmbeddingTables(std::size_t style_rows, std::size_t chars, const EmbeddingDims& dims,
                  std::mt19937_64& rng);

  std::size_t style_rows() const { return style_.value.rows(); }
  std::size_t chars() const { return content_.value.rows(); }
  const EmbeddingDims& dims() const { return dims_; }

  // Throws DataError for ids outside the tables.
  void validate(const GlyphMeta& meta) const;
  // Redraws the row of `style_id` from N(0,1), growing the table if needed.
  void reset_style(std::size_t style_id, std::mt19937_64& rng);

  Parameter& style() { return style_; }
  Parameter& content() { return content_; }
  Parameter& wubi() { return wubi_; }
  const Parameter& style() const { return style_; }
  const Parameter& content() const { return content_; }
  const Parameter& wubi() const { return wubi_; }

 private:
  EmbeddingDims dims_;
  Parameter style_;
  Parameter content_;
  Parameter wubi_;
};

struct GlyphSequence {
  Tensor tokens;  // N x d_token
  std::vector<bool> blank_flags;
};

// Concatenated codebook vectors of one block's patches (B^2 L_c / P^2 values).
std::vector<double> block_embedding(std::span<const std::uint32_t> block_indices,
                                    const Codebook& codebook);

// Differentiable token matrix [x_t | x_s | x_c | x_w1..x_w4], one row per block.
Var embed_tokens(Tape& tape, const ChunkedGlyph& chunks, const GlyphMeta& meta,
                 Codebook& codebook, EmbeddingTables& tables);

GlyphSequence build_glyph_sequence(const GlyphImage& image, const GlyphMeta& meta,
                                   Codebook& codebook, EmbeddingTables& tables,
                                   const ChunkConfig& cfg);
// All-zero token content carrying `meta`; every blank flag set.
GlyphSequence build_blank_sequence(const GlyphMeta& meta, Codebook& codebook,
                                   EmbeddingTables& tables, const ChunkConfig& cfg);
ChunkedGlyph blank_chunks(const ChunkConfig& cfg);

// {0,1} pixels -> {-1,+1}, laid out as N x B^2 (block pixels row-major).
Tensor block_targets(const GlyphImage& image, const ChunkConfig& cfg);
// Inverse of block_targets under threshold 0: value > 0 means ink.
GlyphImage binarize_patches(const Tensor& predictions, const ChunkConfig& cfg);

}  // namespace glyphstack
