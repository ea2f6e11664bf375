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

#include "glyphstack/codec.hpp"

#include <algorithm>
#include <string>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

// 2^20 entries is the largest codebook we allocate.
constexpr std::size_t kMaxPatchPixels = 20;

Tensor standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

void require_geometry(const GlyphImage& image, const ChunkConfig& cfg) {
  if (image.height() != cfg.height || image.width() != cfg.width) {
    throw DataError("image is " + std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + ", config expects " +
                    std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
}

}  // namespace

void ChunkConfig::validate() const {
  if (height == 0 || width == 0 || block == 0 || patch == 0 || patch_dim == 0) {
    throw DataError("chunk config: all extents must be positive");
  }
  if (height % block != 0 || width % block != 0) {
    throw DataError("chunk config: block " + std::to_string(block) + " does not tile " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  if (block % patch != 0) {
    throw DataError("chunk config: patch " + std::to_string(patch) + " does not tile block " +
                    std::to_string(block));
  }
  if (patch_dim > patch * patch) {
    throw DataError("chunk config: patch_dim " + std::to_string(patch_dim) +
                    " exceeds patch pixel count " + std::to_string(patch * patch));
  }
  if (patch * patch > kMaxPatchPixels) {
    throw DataError("chunk config: patch " + std::to_string(patch) + " gives a codebook too large");
  }
}

std::array<std::uint8_t, 4> GlyphMeta::parse_wubi(std::string_view code) {
  if (code.size() != 4) {
    throw DataError("wubi code '" + std::string(code) + "' must have exactly 4 letters");
  }
  std::array<std::uint8_t, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (code[i] < 'a' || code[i] > 'z') {
      throw DataError("wubi code '" + std::string(code) + "' must be lowercase a-z");
    }
    out[i] = static_cast<std::uint8_t>(code[i] - 'a');
  }
  return out;
}

std::string GlyphMeta::format_wubi(const std::array<std::uint8_t, 4>& wubi) {
  std::string code(4, 'a');
  for (std::size_t i = 0; i < 4; ++i) code[i] = static_cast<char>('a' + wubi[i]);
  return code;
}

bool ChunkedGlyph::block_blank(std::size_t b) const {
  const auto span = block(b);
  return std::all_of(span.begin(), span.end(), [](std::uint32_t i) { return i == 0; });
}

std::vector<bool> ChunkedGlyph::blank_flags() const {
  std::vector<bool> flags(blocks);
  for (std::size_t b = 0; b < blocks; ++b) flags[b] = block_blank(b);
  return flags;
}

std::uint32_t patch_to_index(const GlyphImage& patch, std::size_t patch_side) {
  if (patch.height() != patch_side || patch.width() != patch_side) {
    throw DataError("patch is " + std::to_string(patch.height()) + "x" +
                    std::to_string(patch.width()) + ", expected " + std::to_string(patch_side) +
                    "x" + std::to_string(patch_side));
  }
  if (patch_side * patch_side > kMaxPatchPixels) throw DataError("patch too large to index");
  std::uint32_t index = 0;
  const auto pixels = patch.pixels();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i]) index |= std::uint32_t{1} << i;
  }
  return index;
}

GlyphImage index_to_patch(std::uint32_t index, std::size_t patch_side) {
  const std::size_t bits = patch_side * patch_side;
  if (bits > kMaxPatchPixels) throw DataError("patch too large to index");
  if (index >= (std::uint32_t{1} << bits)) {
    throw DataError("patch index " + std::to_string(index) + " out of range for " +
                    std::to_string(patch_side) + "x" + std::to_string(patch_side));
  }
  GlyphImage patch(patch_side, patch_side);
  for (std::size_t i = 0; i < bits; ++i) patch.set(i / patch_side, i % patch_side, (index >> i) & 1U);
  return patch;
}

ChunkedGlyph chunk_image(const GlyphImage& image, const ChunkConfig& cfg) {
  cfg.validate();
  require_geometry(image, cfg);
  const auto pixels = image.pixels();
  if (std::any_of(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p > 1; })) {
    throw DataError("chunk_image: non-binary pixel value");
  }
  ChunkedGlyph out;
  out.blocks = cfg.tokens();
  out.patches_per_block = cfg.patches_per_block();
  out.indices.reserve(out.blocks * out.patches_per_block);
  const std::size_t per_side = cfg.patches_per_side();
  for (std::size_t by = 0; by < cfg.height / cfg.block; ++by) {
    for (std::size_t bx = 0; bx < cfg.blocks_per_row(); ++bx) {
      for (std::size_t py = 0; py < per_side; ++py) {
        for (std::size_t px = 0; px < per_side; ++px) {
          const std::size_t row0 = by * cfg.block + py * cfg.patch;
          const std::size_t col0 = bx * cfg.block + px * cfg.patch;
          std::uint32_t index = 0;
          for (std::size_t i = 0; i < cfg.patch_pixels(); ++i) {
            if (image.at(row0 + i / cfg.patch, col0 + i % cfg.patch)) index |= std::uint32_t{1} << i;
          }
          out.indices.push_back(index);
        }
      }
    }
  }
  return out;
}

GlyphImage assemble_image(const ChunkedGlyph& chunks, const ChunkConfig& cfg) {
  cfg.validate();
  if (chunks.blocks != cfg.tokens() || chunks.patches_per_block != cfg.patches_per_block() ||
      chunks.indices.size() != chunks.blocks * chunks.patches_per_block) {
    throw DataError("assemble_image: " + std::to_string(chunks.blocks) + " blocks of " +
                    std::to_string(chunks.patches_per_block) + " patches, config expects " +
                    std::to_string(cfg.tokens()) + " of " +
                    std::to_string(cfg.patches_per_block()));
  }
  const std::uint32_t limit = static_cast<std::uint32_t>(cfg.codebook_size());
  GlyphImage image(cfg.height, cfg.width);
  const std::size_t per_side = cfg.patches_per_side();
  std::size_t cursor = 0;
  for (std::size_t by = 0; by < cfg.height / cfg.block; ++by) {
    for (std::size_t bx = 0; bx < cfg.blocks_per_row(); ++bx) {
      for (std::size_t py = 0; py < per_side; ++py) {
        for (std::size_t px = 0; px < per_side; ++px) {
          const std::uint32_t index = chunks.indices[cursor++];
          if (index >= limit) throw DataError("assemble_image: patch index out of range");
          const std::size_t row0 = by * cfg.block + py * cfg.patch;
          const std::size_t col0 = bx * cfg.block + px * cfg.patch;
          for (std::size_t i = 0; i < cfg.patch_pixels(); ++i) {
            image.set(row0 + i / cfg.patch, col0 + i % cfg.patch, (index >> i) & 1U);
          }
        }
      }
    }
  }
  return image;
}

std::vector<std::uint32_t> chunk_block_pixels(std::span<const std::uint8_t> block_pixels,
                                              const ChunkConfig& cfg) {
  if (block_pixels.size() != cfg.block_pixels()) {
    throw DataError("chunk_block_pixels: expected " + std::to_string(cfg.block_pixels()) +
                    " pixels");
  }
  const std::size_t per_side = cfg.patches_per_side();
  std::vector<std::uint32_t> indices;
  indices.reserve(cfg.patches_per_block());
  for (std::size_t py = 0; py < per_side; ++py) {
    for (std::size_t px = 0; px < per_side; ++px) {
      std::uint32_t index = 0;
      for (std::size_t i = 0; i < cfg.patch_pixels(); ++i) {
        const std::size_t r = py * cfg.patch + i / cfg.patch;
        const std::size_t c = px * cfg.patch + i % cfg.patch;
        if (block_pixels[r * cfg.block + c]) index |= std::uint32_t{1} << i;
      }
      indices.push_back(index);
    }
  }
  return indices;
}

// ---------------------------------------------------------------- tables

Codebook::Codebook(const ChunkConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  Tensor values = standard_normal(cfg.codebook_size(), cfg.patch_dim, rng);
  for (double& v : values.row(0)) v = 0.0;
  table_ = Parameter("codebook", std::move(values));
  table_.pinned_rows = {0};
}

EmbeddingTables::EmbeddingTables(std::size_t style_rows, std::size_t chars,
                                 const EmbeddingDims& dims, std::mt19937_64& rng)
    : dims_(dims),
      style_("style_table", standard_normal(style_rows, dims.style, rng)),
      content_("content_table", standard_normal(chars, dims.content, rng)),
      wubi_("wubi_table", standard_normal(kWubiLetters, dims.wubi, rng)) {
  if (style_rows == 0 || chars == 0) throw DataError("embedding tables need at least one row");
}

void EmbeddingTables::validate(const GlyphMeta& meta) const {
  if (meta.style_id >= style_rows()) {
    throw DataError("unknown style_id " + std::to_string(meta.style_id) + " (table has " +
                    std::to_string(style_rows()) + " rows)");
  }
  if (meta.char_id < 1 || meta.char_id > chars()) {
    throw DataError("unknown char_id " + std::to_string(meta.char_id) + " (valid 1.." +
                    std::to_string(chars()) + ")");
  }
  for (std::uint8_t letter : meta.wubi) {
    if (letter >= kWubiLetters) throw DataError("wubi letter out of range");
  }
}

void EmbeddingTables::reset_style(std::size_t style_id, std::mt19937_64& rng) {
  const std::size_t width = dims_.style;
  if (style_id >= style_rows()) {
    Tensor grown = Tensor::matrix(style_id + 1, width);
    std::copy_n(style_.value.data(), style_.value.size(), grown.data());
    style_.value = std::move(grown);
    style_.zero_grad();
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : style_.value.row(style_id)) v = normal(rng);
}

// ---------------------------------------------------------------- sequences

std::vector<double> block_embedding(std::span<const std::uint32_t> block_indices,
                                    const Codebook& codebook) {
  const Tensor& table = codebook.table().value;
  const std::size_t width = table.cols();
  std::vector<double> out;
  out.reserve(block_indices.size() * width);
  for (std::uint32_t idx : block_indices) {
    if (idx >= table.rows()) throw DataError("block_embedding: patch index out of range");
    const auto row = table.row(idx);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

Var embed_tokens(Tape& tape, const ChunkedGlyph& chunks, const GlyphMeta& meta,
                 Codebook& codebook, EmbeddingTables& tables) {
  tables.validate(meta);
  const std::size_t n = chunks.blocks;
  if (n == 0) throw DataError("embed_tokens: empty glyph");
  const std::vector<std::uint32_t> style_idx(n, static_cast<std::uint32_t>(meta.style_id));
  const std::vector<std::uint32_t> content_idx(n, static_cast<std::uint32_t>(meta.char_id - 1));
  std::vector<std::uint32_t> wubi_idx;
  wubi_idx.reserve(4 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint8_t letter : meta.wubi) wubi_idx.push_back(letter);

  const Var parts[] = {
      gather_rows(tape.leaf(codebook.table()), chunks.indices, chunks.patches_per_block),
      gather_rows(tape.leaf(tables.style()), style_idx, 1),
      gather_rows(tape.leaf(tables.content()), content_idx, 1),
      gather_rows(tape.leaf(tables.wubi()), wubi_idx, 4),
  };
  return concat_cols(parts);
}

GlyphSequence build_glyph_sequence(const GlyphImage& image, const GlyphMeta& meta,
                                   Codebook& codebook, EmbeddingTables& tables,
                                   const ChunkConfig& cfg) {
  const ChunkedGlyph chunks = chunk_image(image, cfg);
  Tape tape(Tape::Mode::kInference);
  GlyphSequence seq;
  seq.tokens = embed_tokens(tape, chunks, meta, codebook, tables).value();
  seq.blank_flags = chunks.blank_flags();
  return seq;
}

ChunkedGlyph blank_chunks(const ChunkConfig& cfg) {
  ChunkedGlyph chunks;
  chunks.blocks = cfg.tokens();
  chunks.patches_per_block = cfg.patches_per_block();
  chunks.indices.assign(chunks.blocks * chunks.patches_per_block, 0);
  return chunks;
}

GlyphSequence build_blank_sequence(const GlyphMeta& meta, Codebook& codebook,
                                   EmbeddingTables& tables, const ChunkConfig& cfg) {
  cfg.validate();
  const ChunkedGlyph chunks = blank_chunks(cfg);
  Tape tape(Tape::Mode::kInference);
  GlyphSequence seq;
  seq.tokens = embed_tokens(tape, chunks, meta, codebook, tables).value();
  seq.blank_flags.assign(chunks.blocks, true);
  return seq;
}

Tensor block_targets(const GlyphImage& image, const ChunkConfig& cfg) {
  require_geometry(image, cfg);
  Tensor out = Tensor::matrix(cfg.tokens(), cfg.block_pixels());
  std::size_t b = 0;
  for (std::size_t by = 0; by < cfg.height / cfg.block; ++by) {
    for (std::size_t bx = 0; bx < cfg.blocks_per_row(); ++bx, ++b) {
      for (std::size_t r = 0; r < cfg.block; ++r)
        for (std::size_t c = 0; c < cfg.block; ++c)
          out(b, r * cfg.block + c) = image.at(by * cfg.block + r, bx * cfg.block + c) ? 1.0 : -1.0;
    }
  }
  return out;
}

GlyphImage binarize_patches(const Tensor& predictions, const ChunkConfig& cfg) {
  cfg.validate();
  if (predictions.rank() != 2 || predictions.rows() != cfg.tokens() ||
      predictions.cols() != cfg.block_pixels()) {
    throw ShapeError("binarize_patches: predictions " + shape_string(predictions.shape()) +
                     " do not match " + std::to_string(cfg.tokens()) + " blocks of " +
                     std::to_string(cfg.block_pixels()) + " pixels");
  }
  GlyphImage image(cfg.height, cfg.width);
  std::size_t b = 0;
  for (std::size_t by = 0; by < cfg.height / cfg.block; ++by) {
    for (std::size_t bx = 0; bx < cfg.blocks_per_row(); ++bx, ++b) {
      for (std::size_t r = 0; r < cfg.block; ++r)
        for (std::size_t c = 0; c < cfg.block; ++c)
          image.set(by * cfg.block + r, bx * cfg.block + c, predictions(b, r * cfg.block + c) > 0.0);
    }
  }
  return image;
}

}  // namespace glyphstack
