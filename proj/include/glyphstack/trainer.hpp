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
#include <filesystem>
#include <string>
#include <vector>

#include "glyphstack/checkpoint.hpp"
#include "glyphstack/dataset.hpp"
#include "glyphstack/pipeline.hpp"

namespace glyphstack {

enum class LrForm { kStandard, kLiteral };

struct TrainConfig {
  // Optimisation.
  std::size_t batch_size = 64;
  std::size_t pretrain_epochs = 10;
  std::size_t serial_epochs = 0;  // 0 reuses pretrain_epochs for the serial stage
  std::size_t finetune_epochs = 100;
  double finetune_lr = 1e-4;
  std::size_t warmup = 400;
  double factor = 1.0;
  std::size_t d_token = 448;  // schedule width; 0 takes the model's d_token
  LrForm lr_form = LrForm::kStandard;
  double clip_norm = 1.0;
  // Probability that a teacher-forced history block is blanked while
  // training the serial stage. 0 is plain teacher forcing.
  double history_dropout = 0.0;
  std::size_t references = 4;
  std::uint64_t seed = 1;

  // Model shape; H and W come from the corpus.
  std::size_t block = 16;
  std::size_t patch = 4;
  std::size_t patch_dim = 16;
  EmbeddingDims dims{64, 64, 16};
  std::size_t layers = 6;
  std::size_t heads = 8;
  std::size_t ff_width = 0;

  static TrainConfig paper();
  static TrainConfig toy();
  // `profile=toy|paper` selects the base, remaining keys override it.
  static TrainConfig from_text(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);

  void validate() const;
  std::string to_text() const;
  std::string digest() const;
  std::size_t serial_epoch_count() const { return serial_epochs ? serial_epochs : pretrain_epochs; }
  ModelConfig model_config(std::size_t height, std::size_t width, std::size_t style_rows,
                           std::size_t chars) const;
};

// factor * d^-0.5 * min(step^-0.5, step * warmup^-1.5); the literal form
// multiplies by d instead of d^-0.5. step 0 is a UsageError.
double lr_schedule(std::size_t step, std::size_t d_token, std::size_t warmup, double factor = 1.0,
                   LrForm form = LrForm::kStandard);
double lr_schedule(std::size_t step, const TrainConfig& cfg, std::size_t model_d_token);

struct LogLine {
  std::size_t step = 0;
  std::string stage;
  double lr = 0.0;
  double loss = 0.0;
};

// One line per optimiser step: `step<TAB>stage<TAB>lr<TAB>loss`.
struct TrainingLog {
  std::vector<LogLine> lines;
  std::filesystem::path sink;  // appended to as lines arrive when non-empty

  void append(LogLine line);
  std::vector<double> losses(const std::string& stage) const;
  static std::string format(const LogLine& line);
  std::string to_text() const;
};

// Stage 1 (codec + parallel stack, scheduled LR), then stage 2 (serial stack
// only, teacher-forced on fresh stage 1 outputs). Needs at least one
// pretraining style besides the source.
Checkpoint pretrain(const Corpus& corpus, const SplitSpec& split, const TrainConfig& cfg,
                    TrainingLog* log = nullptr);

// Adapts to the single fine-tune style of `split` at constant LR on its
// few-shot characters. The style gets a freshly drawn row; optimiser state
// starts over.
Checkpoint finetune(const Checkpoint& base, const Corpus& corpus, const SplitSpec& split,
                    const TrainConfig& cfg, TrainingLog* log = nullptr);

}  // namespace glyphstack
