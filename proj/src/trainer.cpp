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

#include "glyphstack/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "glyphstack/error.hpp"
#include "glyphstack/keyvalue.hpp"

namespace glyphstack {

namespace {

constexpr std::uint64_t kFinetuneStream = 0xF17E7A5EULL;

using Target = std::pair<std::size_t, std::size_t>;

void shuffle(std::vector<Target>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng() % i]);
  }
}

std::string describe(const SynthesisTask& task) {
  std::string refs;
  for (const ReferenceGlyph& r : task.references) refs += (refs.empty() ? "" : ",") + std::to_string(r.meta.char_id);
  return "(style " + std::to_string(task.target.style_id) + ", char " + std::to_string(task.target.char_id) +
         ", refs " + refs + ")";
}

struct StageSpec {
  std::string name;
  TaskPhase phase;
  bool serial;
  std::size_t epochs;
};

// Runs `epochs` passes over `targets`; each batch accumulates mean-reduced
// gradients over its tasks, clips, then takes one Adam step.
template <typename LrFn>
void run_stage(const StageSpec& stage, std::vector<Target> targets, const Corpus& corpus,
               const SplitSpec& split, const TrainConfig& cfg, FontModel& model,
               const ParameterList& params, AdamState& adam, LrFn lr_of_step, std::mt19937_64& rng,
               TrainingLog* log) {
  const ChunkConfig& chunk = model.chunk();
  for (std::size_t epoch = 0; epoch < stage.epochs; ++epoch) {
    shuffle(targets, rng);
    for (std::size_t start = 0; start < targets.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(targets.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      std::vector<SynthesisTask> batch;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(make_task(corpus, split, stage.phase, targets[i].first, targets[i].second,
                                  cfg.references, rng));
      }
      zero_grads(params);
      double total = 0.0;
      std::vector<double> item_losses;
      for (const SynthesisTask& task : batch) {
        Tape tape(Tape::Mode::kRecord);
        Var pred;
        if (stage.serial) {
          const StageOutput stage1 = tp_forward(task, model);
          std::vector<bool> blanked;
          if (cfg.history_dropout > 0.0) {
            std::bernoulli_distribution drop(cfg.history_dropout);
            blanked.assign(chunk.tokens(), false);
            for (std::size_t i = 1; i < blanked.size(); ++i) blanked[i] = drop(rng);
          }
          pred = ts_predict(tape, task, stage1.image, model, blanked);
        } else {
          pred = tp_predict(tape, task, model);
        }
        const Var loss = loss_mse(pred, *task.ground_truth, chunk);
        const double value = loss.value()[0];
        item_losses.push_back(value);
        total += value;
        if (std::isfinite(value)) tape.backward(loss, weight);
      }
      if (!std::isfinite(total)) {
        std::string dump;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          dump += (i ? "; " : "") + describe(batch[i]) + " loss=" + format_double(item_losses[i]);
        }
        throw NumericFault("non-finite loss in " + stage.name + " at step " + std::to_string(adam.step + 1) +
                           ", batch: " + dump);
      }
      clip_grad_norm(params, cfg.clip_norm);
      const std::size_t step = adam.step + 1;
      const double lr = lr_of_step(step);
      adam_update(params, adam, lr);
      if (log) log->append({step, stage.name, lr, total * weight});
    }
  }
}

ParameterList parallel_list(FontModel& model) {
  ParameterList out = model.codec_parameters();
  for (Parameter* p : model.parallel_parameters()) out.push_back(p);
  return out;
}

// Both stages of either phase. Stage 2 sees the frozen stage 1 result.
template <typename LrFn>
void train_both(const std::string& prefix, TaskPhase phase, std::size_t tp_epochs, std::size_t ts_epochs,
                const Corpus& corpus, const SplitSpec& split, const TrainConfig& cfg, Checkpoint& ckpt,
                LrFn lr_of_step, std::mt19937_64& rng, TrainingLog* log) {
  FontModel& model = ckpt.model;
  const std::vector<Target> targets = phase_targets(corpus, split, phase);
  if (targets.empty()) throw DataError(prefix + ": no training targets in the split");

  const ParameterList tp_params = parallel_list(model);
  const ParameterList ts_params = model.serial_parameters();
  ckpt.parallel_adam = AdamState::for_params(tp_params);
  ckpt.serial_adam = AdamState::for_params(ts_params);

  set_requires_grad(model.all_parameters(), true);
  set_requires_grad(ts_params, false);
  run_stage({prefix + "_tp", phase, false, tp_epochs}, targets, corpus, split, cfg, model, tp_params,
            ckpt.parallel_adam, lr_of_step, rng, log);
  set_requires_grad(model.all_parameters(), false);
  set_requires_grad(ts_params, true);
  run_stage({prefix + "_ts", phase, true, ts_epochs}, targets, corpus, split, cfg, model, ts_params,
            ckpt.serial_adam, lr_of_step, rng, log);
  set_requires_grad(model.all_parameters(), true);
  zero_grads(model.all_parameters());
}

}  // namespace

// ---------------------------------------------------------------- config

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::toy() {
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.pretrain_epochs = 100;
  cfg.finetune_epochs = 100;
  cfg.warmup = 400;
  cfg.d_token = 0;
  cfg.block = 8;
  cfg.patch = 4;
  cfg.patch_dim = 4;
  cfg.dims = {16, 16, 4};
  cfg.layers = 2;
  cfg.heads = 4;
  return cfg;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  static const std::set<std::string> known = {
      "profile", "batch_size", "pretrain_epochs", "serial_epochs", "finetune_epochs", "finetune_lr",
      "warmup", "factor", "d_token", "lr_form", "clip_norm", "history_dropout", "references", "seed", "block", "patch",
      "patch_dim", "style_dim", "content_dim", "wubi_dim", "layers", "heads", "ff_width"};
  for (const auto& [key, value] : kv.entries()) {
    if (!known.count(key)) throw UsageError("train config: unknown key '" + key + "'");
  }
  const std::string profile = kv.get_or("profile", "paper");
  TrainConfig cfg;
  if (profile == "toy") {
    cfg = toy();
  } else if (profile != "paper") {
    throw UsageError("train config: unknown profile '" + profile + "'");
  }
  cfg.batch_size = kv.get_size_or("batch_size", cfg.batch_size);
  cfg.pretrain_epochs = kv.get_size_or("pretrain_epochs", cfg.pretrain_epochs);
  cfg.serial_epochs = kv.get_size_or("serial_epochs", cfg.serial_epochs);
  cfg.finetune_epochs = kv.get_size_or("finetune_epochs", cfg.finetune_epochs);
  cfg.finetune_lr = kv.get_double_or("finetune_lr", cfg.finetune_lr);
  cfg.warmup = kv.get_size_or("warmup", cfg.warmup);
  cfg.factor = kv.get_double_or("factor", cfg.factor);
  cfg.d_token = kv.get_size_or("d_token", cfg.d_token);
  const std::string form = kv.get_or("lr_form", cfg.lr_form == LrForm::kLiteral ? "literal" : "standard");
  if (form == "standard") {
    cfg.lr_form = LrForm::kStandard;
  } else if (form == "literal") {
    cfg.lr_form = LrForm::kLiteral;
  } else {
    throw UsageError("train config: lr_form must be standard or literal");
  }
  cfg.clip_norm = kv.get_double_or("clip_norm", cfg.clip_norm);
  cfg.history_dropout = kv.get_double_or("history_dropout", cfg.history_dropout);
  cfg.references = kv.get_size_or("references", cfg.references);
  cfg.seed = kv.get_u64_or("seed", cfg.seed);
  cfg.block = kv.get_size_or("block", cfg.block);
  cfg.patch = kv.get_size_or("patch", cfg.patch);
  cfg.patch_dim = kv.get_size_or("patch_dim", cfg.patch_dim);
  cfg.dims.style = kv.get_size_or("style_dim", cfg.dims.style);
  cfg.dims.content = kv.get_size_or("content_dim", cfg.dims.content);
  cfg.dims.wubi = kv.get_size_or("wubi_dim", cfg.dims.wubi);
  cfg.layers = kv.get_size_or("layers", cfg.layers);
  cfg.heads = kv.get_size_or("heads", cfg.heads);
  cfg.ff_width = kv.get_size_or("ff_width", cfg.ff_width);
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read train config " + path.string());
  return from_text(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

void TrainConfig::validate() const {
  if (batch_size == 0 || warmup == 0 || references == 0 || layers == 0 || heads == 0) {
    throw UsageError("train config: batch_size, warmup, references, layers and heads must be positive");
  }
  if (!(history_dropout >= 0.0 && history_dropout < 1.0)) {
    throw UsageError("train config: history_dropout must lie in [0, 1)");
  }
  if (!(finetune_lr > 0) || !(factor > 0) || !(clip_norm > 0)) {
    throw UsageError("train config: finetune_lr, factor and clip_norm must be positive");
  }
}

std::string TrainConfig::to_text() const {
  KeyValues kv;
  kv.set("batch_size", batch_size);
  kv.set("pretrain_epochs", pretrain_epochs);
  kv.set("serial_epochs", serial_epochs);
  kv.set("finetune_epochs", finetune_epochs);
  kv.set_double("finetune_lr", finetune_lr);
  kv.set("warmup", warmup);
  kv.set_double("factor", factor);
  kv.set("d_token", d_token);
  kv.set("lr_form", lr_form == LrForm::kLiteral ? "literal" : "standard");
  kv.set_double("clip_norm", clip_norm);
  kv.set_double("history_dropout", history_dropout);
  kv.set("references", references);
  kv.set("seed", std::to_string(seed));
  kv.set("block", block);
  kv.set("patch", patch);
  kv.set("patch_dim", patch_dim);
  kv.set("style_dim", dims.style);
  kv.set("content_dim", dims.content);
  kv.set("wubi_dim", dims.wubi);
  kv.set("layers", layers);
  kv.set("heads", heads);
  kv.set("ff_width", ff_width);
  return kv.to_text();
}

std::string TrainConfig::digest() const { return hex64(fnv1a64(to_text())); }

ModelConfig TrainConfig::model_config(std::size_t height, std::size_t width, std::size_t style_rows,
                                      std::size_t chars) const {
  ModelConfig m;
  m.chunk = {height, width, block, patch, patch_dim};
  m.dims = dims;
  m.style_rows = style_rows;
  m.chars = chars;
  StackConfig s;
  s.d_model = m.d_token();
  s.encoder_layers = s.decoder_layers = layers;
  s.heads = heads;
  s.ff_width = ff_width;
  m.parallel = m.serial = s;
  m.validate();
  return m;
}

// ---------------------------------------------------------------- schedule

double lr_schedule(std::size_t step, std::size_t d_token, std::size_t warmup, double factor, LrForm form) {
  if (step == 0) throw UsageError("lr_schedule: steps start at 1");
  if (d_token == 0 || warmup == 0) throw UsageError("lr_schedule: d_token and warmup must be positive");
  const double s = static_cast<double>(step);
  const double d = static_cast<double>(d_token);
  const double ramp = std::min(1.0 / std::sqrt(s), s * std::pow(static_cast<double>(warmup), -1.5));
  const double width = form == LrForm::kLiteral ? d : 1.0 / std::sqrt(d);
  return factor * width * ramp;
}

double lr_schedule(std::size_t step, const TrainConfig& cfg, std::size_t model_d_token) {
  return lr_schedule(step, cfg.d_token ? cfg.d_token : model_d_token, cfg.warmup, cfg.factor, cfg.lr_form);
}

// ---------------------------------------------------------------- log

void TrainingLog::append(LogLine line) {
  if (!sink.empty()) {
    std::ofstream out(sink, std::ios::app);
    if (!out) throw DataError("cannot append to training log " + sink.string());
    out << format(line) << '\n';
  }
  lines.push_back(std::move(line));
}

std::vector<double> TrainingLog::losses(const std::string& stage) const {
  std::vector<double> out;
  for (const LogLine& l : lines)
    if (l.stage == stage) out.push_back(l.loss);
  return out;
}

std::string TrainingLog::format(const LogLine& line) {
  return std::to_string(line.step) + '\t' + line.stage + '\t' + format_double(line.lr) + '\t' +
         format_double(line.loss);
}

std::string TrainingLog::to_text() const {
  std::string out;
  for (const LogLine& l : lines) out += format(l) + '\n';
  return out;
}

// ---------------------------------------------------------------- phases

Checkpoint pretrain(const Corpus& corpus, const SplitSpec& split, const TrainConfig& cfg, TrainingLog* log) {
  cfg.validate();
  split.validate();
  std::size_t style_rows = 1;
  bool has_target = false;
  for (std::size_t s : split.pretrain_styles) {
    if (corpus.chars_of_style(s).empty()) throw DataError("pretrain: style " + std::to_string(s) + " not in corpus");
    style_rows = std::max(style_rows, s + 1);
    has_target = has_target || s != 0;
  }
  if (!has_target) throw DataError("pretrain: needs a pretraining style besides the source (style 0)");

  const CorpusManifest& m = corpus.manifest();
  Checkpoint ckpt;
  ckpt.model = FontModel(cfg.model_config(m.height, m.width, style_rows, m.max_char()), cfg.seed);
  ckpt.seed = cfg.seed;
  ckpt.references = cfg.references;
  ckpt.config_digest = cfg.digest();
  ckpt.split_digest = split.digest();
  ckpt.pretrain_styles = split.pretrain_styles;

  std::mt19937_64 rng(cfg.seed);
  const std::size_t d = ckpt.model.config().d_token();
  auto lr_of_step = [&](std::size_t step) { return lr_schedule(step, cfg, d); };
  train_both("pretrain", TaskPhase::kPretrain, cfg.pretrain_epochs, cfg.serial_epoch_count(), corpus, split, cfg,
             ckpt, lr_of_step, rng, log);
  return ckpt;
}

Checkpoint finetune(const Checkpoint& base, const Corpus& corpus, const SplitSpec& split, const TrainConfig& cfg,
                    TrainingLog* log) {
  cfg.validate();
  split.validate();
  if (split.finetune_styles.size() != 1) throw UsageError("finetune: the split must name exactly one fine-tune style");
  const std::size_t style = split.finetune_styles.front();
  for (std::size_t s : base.pretrain_styles) {
    if (s == style) throw DataError("finetune: style " + std::to_string(style) + " collides with a pretrain style");
  }
  if (!(base.model.chunk().height == corpus.manifest().height && base.model.chunk().width == corpus.manifest().width)) {
    throw DataError("finetune: corpus geometry differs from the checkpoint");
  }
  if (corpus.manifest().max_char() > base.model.config().chars) {
    throw DataError("finetune: corpus has char ids beyond the checkpoint's content table");
  }

  Checkpoint ckpt = base;
  ckpt.references = cfg.references;
  ckpt.config_digest = cfg.digest();
  ckpt.split_digest = split.digest();
  ckpt.finetuned_styles.push_back(style);

  std::mt19937_64 rng(cfg.seed ^ kFinetuneStream);
  ckpt.model.reset_style(style, rng);
  auto lr_of_step = [&](std::size_t) { return cfg.finetune_lr; };
  train_both("finetune", TaskPhase::kFinetune, cfg.finetune_epochs, cfg.finetune_epochs, corpus, split, cfg, ckpt,
             lr_of_step, rng, log);
  return ckpt;
}

}  // namespace glyphstack
