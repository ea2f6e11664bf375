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

#include "glyphstack/pipeline.hpp"

#include <string>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

void require_image(const GlyphImage& image, const ChunkConfig& cfg, const char* what) {
  if (image.height() != cfg.height || image.width() != cfg.width) {
    throw DataError(std::string(what) + " is " + std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + ", model expects " +
                    std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
}

struct EmbeddedGlyph {
  Var tokens;
  std::vector<bool> blank;
};

EmbeddedGlyph embed(Tape& tape, const ChunkedGlyph& chunks, const GlyphMeta& meta,
                    FontModel& model) {
  return {embed_tokens(tape, chunks, meta, model.codebook, model.tables), chunks.blank_flags()};
}

EmbeddedGlyph embed(Tape& tape, const GlyphImage& image, const GlyphMeta& meta,
                    FontModel& model) {
  return embed(tape, chunk_image(image, model.chunk()), meta, model);
}

// [start, b_0, ..., b_{N-2}]: the decoder input that predicts b_i at slot i.
ChunkedGlyph shift_right(const ChunkedGlyph& chunks) {
  ChunkedGlyph shifted = chunks;
  const std::size_t width = chunks.patches_per_block;
  std::fill(shifted.indices.begin(), shifted.indices.end(), 0U);
  std::copy(chunks.indices.begin(), chunks.indices.end() - static_cast<std::ptrdiff_t>(width),
            shifted.indices.begin() + static_cast<std::ptrdiff_t>(width));
  return shifted;
}

Var concat_two(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_rows(parts);
}

std::vector<std::size_t> two_part_positions(std::size_t first, std::size_t second) {
  std::vector<std::size_t> out;
  out.reserve(first + second);
  for (std::size_t i = 0; i < first; ++i) out.push_back(i);
  for (std::size_t i = 0; i < second; ++i) out.push_back(i);
  return out;
}

Tensor latter_half(const Tensor& full, std::size_t n) {
  Tensor out = Tensor::matrix(n, full.cols());
  std::copy_n(full.data() + n * full.cols(), n * full.cols(), out.data());
  return out;
}

Var serial_memory(Tape& tape, const GlyphImage& stage1, const GlyphMeta& target,
                  FontModel& model, std::vector<bool>& memory_blank) {
  EmbeddedGlyph coarse = embed(tape, stage1, target, model);
  memory_blank = coarse.blank;
  const std::vector<std::size_t> positions = glyph_positions(1, model.chunk().tokens());
  return encode(coarse.tokens, positions, encoder_mask(coarse.blank), model.serial);
}

}  // namespace

// ---------------------------------------------------------------- model

void ModelConfig::validate() const {
  chunk.validate();
  parallel.validate();
  serial.validate();
  const std::size_t d = d_token();
  if (parallel.d_model != d || serial.d_model != d) {
    throw DataError("model config: stack width must equal d_token " + std::to_string(d));
  }
  if (style_rows == 0 || chars == 0) throw DataError("model config: empty style or content table");
}

FontModel::FontModel(const ModelConfig& cfg, std::uint64_t seed) : config_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  codebook = Codebook(cfg.chunk, rng);
  tables = EmbeddingTables(cfg.style_rows, cfg.chars, cfg.dims, rng);
  parallel = StackParams(cfg.parallel, cfg.chunk.block_pixels(), "tp", rng);
  serial = StackParams(cfg.serial, cfg.chunk.block_pixels(), "ts", rng);
}

ParameterList FontModel::codec_parameters() {
  return {&codebook.table(), &tables.style(), &tables.content(), &tables.wubi()};
}

ParameterList FontModel::parallel_parameters() { return parallel.parameters(); }
ParameterList FontModel::serial_parameters() { return serial.parameters(); }

ParameterList FontModel::all_parameters() {
  ParameterList out = codec_parameters();
  for (Parameter* p : parallel.parameters()) out.push_back(p);
  for (Parameter* p : serial.parameters()) out.push_back(p);
  return out;
}

void FontModel::reset_style(std::size_t style_id, std::mt19937_64& rng) {
  tables.reset_style(style_id, rng);
  config_.style_rows = tables.style_rows();
}

// ---------------------------------------------------------------- task

GlyphMeta SynthesisTask::source_meta() const {
  GlyphMeta meta = target;
  meta.style_id = 0;
  return meta;
}

void SynthesisTask::validate(const ChunkConfig& cfg) const {
  if (references.empty()) throw DataError("synthesis task needs at least one reference glyph");
  require_image(source, cfg, "source glyph");
  for (const ReferenceGlyph& ref : references) {
    require_image(ref.image, cfg, "reference glyph");
    if (ref.meta.style_id != target.style_id) {
      throw DataError("reference style " + std::to_string(ref.meta.style_id) +
                      " differs from target style " + std::to_string(target.style_id));
    }
    if (ref.meta.char_id == target.char_id) {
      throw DataError("reference uses the target character " + std::to_string(target.char_id));
    }
  }
  if (ground_truth) require_image(*ground_truth, cfg, "ground-truth glyph");
}

// ---------------------------------------------------------------- stage 1

Var tp_predict(Tape& tape, const SynthesisTask& task, FontModel& model) {
  const ChunkConfig& cfg = model.chunk();
  task.validate(cfg);
  const std::size_t n = cfg.tokens();

  std::vector<Var> ref_tokens;
  std::vector<bool> ref_blank;
  for (const ReferenceGlyph& ref : task.references) {
    EmbeddedGlyph e = embed(tape, ref.image, ref.meta, model);
    ref_tokens.push_back(e.tokens);
    ref_blank.insert(ref_blank.end(), e.blank.begin(), e.blank.end());
  }
  Var encoder_in = ref_tokens.size() == 1 ? ref_tokens[0] : concat_rows(ref_tokens);
  const std::vector<std::size_t> enc_positions = glyph_positions(task.references.size(), n);
  Var memory = encode(encoder_in, enc_positions, encoder_mask(ref_blank), model.parallel);

  EmbeddedGlyph source = embed(tape, task.source, task.source_meta(), model);
  EmbeddedGlyph blank = embed(tape, blank_chunks(cfg), task.target, model);
  Var decoder_in = concat_two(source.tokens, blank.tokens);
  const std::vector<std::size_t> dec_positions = glyph_positions(2, n);
  Var hidden = decode(decoder_in, dec_positions, memory, parallel_self_mask(source.blank),
                      cross_mask(2 * n, ref_blank), model.parallel);
  return generate_patches(hidden, model.parallel);
}

StageOutput tp_forward(const SynthesisTask& task, FontModel& model) {
  Tape tape(Tape::Mode::kInference);
  const Tensor& full = tp_predict(tape, task, model).value();
  StageOutput out;
  out.patches = latter_half(full, model.chunk().tokens());
  check_finite(out.patches, "parallel stage output");
  out.image = binarize_patches(out.patches, model.chunk());
  return out;
}

// ---------------------------------------------------------------- stage 2

Var ts_predict(Tape& tape, const SynthesisTask& task, const GlyphImage& stage1,
               FontModel& model, const std::vector<bool>& blanked_history) {
  const ChunkConfig& cfg = model.chunk();
  task.validate(cfg);
  if (!task.ground_truth) throw DataError("serial training step needs a ground-truth glyph");
  require_image(stage1, cfg, "stage-1 glyph");
  const std::size_t n = cfg.tokens();

  std::vector<bool> memory_blank;
  Var memory = serial_memory(tape, stage1, task.target, model, memory_blank);

  EmbeddedGlyph source = embed(tape, task.source, task.source_meta(), model);
  ChunkedGlyph history = shift_right(chunk_image(*task.ground_truth, cfg));
  if (!blanked_history.empty()) {
    if (blanked_history.size() != n) {
      throw ShapeError("ts_predict: blanked_history has " + std::to_string(blanked_history.size()) +
                       " entries, expected " + std::to_string(n));
    }
    const std::size_t width = history.patches_per_block;
    for (std::size_t i = 0; i < n; ++i) {
      if (!blanked_history[i]) continue;
      std::fill_n(history.indices.begin() + static_cast<std::ptrdiff_t>(i * width), width, 0U);
    }
  }
  EmbeddedGlyph shifted = embed(tape, history, task.target, model);
  Var decoder_in = concat_two(source.tokens, shifted.tokens);
  const std::vector<std::size_t> positions = glyph_positions(2, n);
  Var hidden = decode(decoder_in, positions, memory, serial_self_mask(source.blank, shifted.blank),
                      cross_mask(2 * n, memory_blank), model.serial);
  return generate_patches(hidden, model.serial);
}

Tensor ts_train_forward(const SynthesisTask& task, const StageOutput& stage1, FontModel& model) {
  Tape tape(Tape::Mode::kInference);
  return latter_half(ts_predict(tape, task, stage1.image, model).value(), model.chunk().tokens());
}

StageOutput ts_infer(const SynthesisTask& task, const StageOutput& stage1, FontModel& model,
                     std::size_t* steps_taken) {
  const ChunkConfig& cfg = model.chunk();
  task.validate(cfg);
  require_image(stage1.image, cfg, "stage-1 glyph");
  const std::size_t n = cfg.tokens();

  Tensor memory;
  Tensor source_tokens;
  std::vector<bool> memory_blank;
  std::vector<bool> source_blank;
  {
    Tape tape(Tape::Mode::kInference);
    memory = serial_memory(tape, stage1.image, task.target, model, memory_blank).value();
    EmbeddedGlyph source = embed(tape, task.source, task.source_meta(), model);
    source_tokens = source.tokens.value();
    source_blank = source.blank;
  }

  // Decoder input history, grown one block per step.
  ChunkedGlyph history;
  history.blocks = 1;
  history.patches_per_block = cfg.patches_per_block();
  history.indices.assign(cfg.patches_per_block(), 0U);

  StageOutput out;
  out.patches = Tensor::matrix(n, cfg.block_pixels());
  std::size_t steps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Tape tape(Tape::Mode::kInference);
    EmbeddedGlyph prefix = embed(tape, history, task.target, model);
    Var decoder_in = concat_two(tape.constant(source_tokens), prefix.tokens);
    const std::vector<std::size_t> positions = two_part_positions(n, i + 1);
    Var hidden = decode(decoder_in, positions, tape.constant(memory),
                        serial_self_mask(source_blank, prefix.blank),
                        cross_mask(n + i + 1, memory_blank), model.serial);
    Var block = generate_patches(slice_rows(hidden, n + i, 1), model.serial);
    const Tensor& values = block.value();
    check_finite(values, "serial stage output");
    std::copy_n(values.data(), values.size(), out.patches.data() + i * cfg.block_pixels());
    ++steps;

    if (i + 1 < n) {
      std::vector<std::uint8_t> pixels(cfg.block_pixels());
      for (std::size_t p = 0; p < pixels.size(); ++p) pixels[p] = values[p] > 0.0 ? 1 : 0;
      const std::vector<std::uint32_t> indices = chunk_block_pixels(pixels, cfg);
      history.indices.insert(history.indices.end(), indices.begin(), indices.end());
      ++history.blocks;
    }
  }
  if (steps_taken) *steps_taken = steps;
  out.image = binarize_patches(out.patches, cfg);
  return out;
}

// ---------------------------------------------------------------- loss

Var loss_mse(Var predictions, const GlyphImage& target, const ChunkConfig& cfg) {
  const std::size_t n = cfg.tokens();
  if (predictions.value().rank() != 2 || predictions.rows() != 2 * n ||
      predictions.cols() != cfg.block_pixels()) {
    throw ShapeError("loss_mse: predictions " + shape_string(predictions.value().shape()) +
                     " are not 2N x B^2 = " + std::to_string(2 * n) + "x" +
                     std::to_string(cfg.block_pixels()));
  }
  return mse_rows(predictions, n, block_targets(target, cfg));
}

double loss_mse(const Tensor& predictions, const GlyphImage& target, const ChunkConfig& cfg) {
  Tape tape(Tape::Mode::kInference);
  return loss_mse(tape.constant(predictions), target, cfg).value()[0];
}

SynthesisResult synthesize_stages(const SynthesisTask& task, FontModel& model) {
  SynthesisResult result;
  result.parallel = tp_forward(task, model);
  result.serial = ts_infer(task, result.parallel, model);
  return result;
}

GlyphImage synthesize(const SynthesisTask& task, FontModel& model) {
  return synthesize_stages(task, model).serial.image;
}

}  // namespace glyphstack
