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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "glyphstack/checkpoint.hpp"
#include "glyphstack/dataset.hpp"
#include "glyphstack/image.hpp"

namespace glyphstack {

// Mean |pred - target| over pixels; geometry mismatch is a ShapeError.
double mae(const GlyphImage& pred, const GlyphImage& target);
// Fraction of pixels that agree, i.e. 1 - mae for binary images.
double pixel_accuracy(const GlyphImage& pred, const GlyphImage& target);

struct EvalRow {
  std::size_t style_id = 0;
  std::size_t char_id = 0;
  double mae = 0.0;
  double pixel_acc = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_mae = 0.0;
  double mean_pixel_acc = 0.0;
  std::string checkpoint_digest;
  std::string config_digest;
  std::string split_digest;
  std::uint64_t seed = 0;
  std::size_t references = 0;

  // `#` header lines with run metadata, then `style_id char_id mae pixel_acc`.
  std::string to_tsv() const;
  void write(const std::filesystem::path& path) const;
};

using Synthesizer = std::function<GlyphImage(const SynthesisTask&)>;

// Runs `synth` on every task of `phase` (test chars of the fine-tune style for
// kEvaluate), rows in target order. References come from a generator seeded
// with `seed`, so repeated calls agree.
EvalReport evaluate(const Synthesizer& synth, const Corpus& corpus, const SplitSpec& split, TaskPhase phase,
                    std::size_t references, std::uint64_t seed);
// The checkpoint's model as the synthesizer.
EvalReport evaluate(const Checkpoint& ckpt, const Corpus& corpus, const SplitSpec& split,
                    TaskPhase phase = TaskPhase::kEvaluate);

// Baseline synthesizers.
Synthesizer copy_source_synthesizer();

}  // namespace glyphstack
