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
#include <optional>
#include <vector>

#include "glyphstack/codec.hpp"
#include "glyphstack/transformer.hpp"

namespace glyphstack {

struct ModelConfig {
  ChunkConfig chunk = ChunkConfig::toy();
  EmbeddingDims dims;
  std::size_t style_rows = 2;  // S + 1, row 0 is the source font
  std::size_t chars = 1;       // C, char ids 1..C
  StackConfig parallel;
  StackConfig serial;

  std::size_t d_token() const { return dims.d_token(chunk); }
  // Checks geometry, stack widths against d_token, and table sizes.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Shared codebook and embedding tables, plus disjoint parallel (stage 1) and
// serial (stage 2) stacks.
class FontModel {
 public:
  FontModel() = default;
  FontModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ChunkConfig& chunk() const { return config_.chunk; }

  ParameterList codec_parameters();
  ParameterList parallel_parameters();
  ParameterList serial_parameters();
  ParameterList all_parameters();

  // Redraws (and, if needed, appends) the style row for a new font.
  void reset_style(std::size_t style_id, std::mt19937_64& rng);

  Codebook codebook;
  EmbeddingTables tables;
  StackParams parallel;
  StackParams serial;

 private:
  ModelConfig config_;
};

struct ReferenceGlyph {
  GlyphImage image;
  GlyphMeta meta;
};

struct SynthesisTask {
  GlyphImage source;
  std::vector<ReferenceGlyph> references;
  GlyphMeta target;
  std::optional<GlyphImage> ground_truth;

  // Source meta: the target character rendered in style 0.
  GlyphMeta source_meta() const;
  // Throws DataError when the task breaks a structural rule (k = 0,
  // reference in another style, reference equal to the target char, ...).
  void validate(const ChunkConfig& cfg) const;
};

struct StageOutput {
  Tensor patches;  // N x B^2 in (-1, 1)
  GlyphImage image;
};

// Stage 1 on a tape. Encoder reads the k references; decoder reads
// [source | blank target]. Returns generator output for all 2N decoder
// positions; the latter N are the prediction.
Var tp_predict(Tape& tape, const SynthesisTask& task, FontModel& model);
StageOutput tp_forward(const SynthesisTask& task, FontModel& model);

// Stage 2, teacher-forced on task.ground_truth. Encoder reads `stage1`;
// decoder reads [source | start, gt_0 .. gt_{N-2}] under the serial mask.
// Returns generator output for all 2N decoder positions. History slot i
// (1 <= i < N, holding gt_{i-1}) is replaced by a blank block when
// `blanked_history` is non-empty and its entry i is set; blank history keys
// are masked, so a blanked slot carries no ground truth.
Var ts_predict(Tape& tape, const SynthesisTask& task, const GlyphImage& stage1,
               FontModel& model, const std::vector<bool>& blanked_history = {});
// Latter-half predictions of ts_predict (N x B^2).
Tensor ts_train_forward(const SynthesisTask& task, const StageOutput& stage1, FontModel& model);

// Stage 2 at inference: N strictly sequential decode steps, each binarizing
// the newest block and feeding it back through the codebook.
StageOutput ts_infer(const SynthesisTask& task, const StageOutput& stage1, FontModel& model,
                     std::size_t* steps_taken = nullptr);

// Mean squared error between the latter half of a 2N x B^2 prediction and the
// +-1 mapped target.
Var loss_mse(Var predictions, const GlyphImage& target, const ChunkConfig& cfg);
double loss_mse(const Tensor& predictions, const GlyphImage& target, const ChunkConfig& cfg);

struct SynthesisResult {
  StageOutput parallel;
  StageOutput serial;
};

SynthesisResult synthesize_stages(const SynthesisTask& task, FontModel& model);
GlyphImage synthesize(const SynthesisTask& task, FontModel& model);

}  // namespace glyphstack
