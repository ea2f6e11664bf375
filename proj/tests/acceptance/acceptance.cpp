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


// One PASS/FAIL line per acceptance criterion. Arguments restrict the run to
// the listed criterion numbers; the exit status is 1 if any selected
// criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "glyphstack/checkpoint.hpp"
#include "glyphstack/codec.hpp"
#include "glyphstack/dataset.hpp"
#include "glyphstack/eval.hpp"
#include "glyphstack/gradcheck_suite.hpp"
#include "glyphstack/pipeline.hpp"
#include "glyphstack/toy_corpus.hpp"
#include "glyphstack/trainer.hpp"
#include "glyphstack/transformer.hpp"

namespace fs = std::filesystem;
using namespace glyphstack;

namespace {

// ---------------------------------------------------------------- pinned values

constexpr std::size_t kRoundTripImages = 1000;
constexpr double kRoundTripSeconds = 60.0;
constexpr std::size_t kMaskCases = 100;
constexpr double kMaskTolerance = 1e-12;
constexpr double kGradTolerance = 1e-5;
constexpr double kGradStep = 1e-6;
constexpr double kGradSeconds = 300.0;
constexpr double kLrRelTolerance = 1e-9;
constexpr std::size_t kOverfitMaxSteps = 3000;
constexpr double kOverfitSeconds = 900.0;
constexpr double kOverfitMae = 0.05;
constexpr double kFewShotSeconds = 3600.0;
constexpr std::size_t kCheckpointTasks = 20;

const char* const kOverfitCorpus = "styles=2, chars=8, size=32, seed=1";
const char* const kOverfitConfig = "profile=toy, batch_size=4, pretrain_epochs=300, references=2, seed=1";

const char* const kFewShotCorpus = "styles=6, chars=40, size=32, seed=1";
const char* const kFewShotPretrain =
    "profile=toy, batch_size=4, factor=0.2, pretrain_epochs=100, serial_epochs=150, history_dropout=0.9, seed=1";
const char* const kFewShotFinetune = "profile=toy, batch_size=4, history_dropout=0.9, seed=1";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

GlyphImage random_image(std::size_t h, std::size_t w, std::mt19937_64& rng, int ink_in_8 = 4) {
  GlyphImage g(h, w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; c += 16) {
      std::uint64_t bits = rng();
      for (std::size_t j = 0; j < 16 && c + j < w; ++j, bits >>= 4) {
        g.set(r, c + j, static_cast<int>(bits & 7U) < ink_in_8);
      }
    }
  }
  return g;
}

void clear_block(GlyphImage& g, const ChunkConfig& cfg, std::size_t b) {
  const std::size_t r0 = (b / cfg.blocks_per_row()) * cfg.block;
  const std::size_t c0 = (b % cfg.blocks_per_row()) * cfg.block;
  for (std::size_t r = 0; r < cfg.block; ++r)
    for (std::size_t c = 0; c < cfg.block; ++c) g.set(r0 + r, c0 + c, false);
}

double max_row_diff(const Tensor& a, const Tensor& b, std::size_t r) {
  double worst = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
  return worst;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Toy-geometry model with 2-layer stacks of width d_token = 64.
ModelConfig toy_model(std::size_t layers = 2) {
  ModelConfig cfg;
  cfg.chunk = ChunkConfig::toy();
  cfg.dims = {16, 16, 4};
  cfg.style_rows = 3;
  cfg.chars = 8;
  StackConfig s;
  s.d_model = cfg.d_token();
  s.encoder_layers = s.decoder_layers = layers;
  s.heads = 4;
  cfg.parallel = cfg.serial = s;
  return cfg;
}

GlyphMeta random_meta(std::size_t style, std::size_t ch, std::mt19937_64& rng) {
  GlyphMeta m{style, ch, {}};
  for (std::uint8_t& letter : m.wubi) letter = static_cast<std::uint8_t>(rng() % 26);
  return m;
}

// ---------------------------------------------------------------- 1, 2

Outcome codec_round_trip() {
  const double start = cpu_seconds();
  std::mt19937_64 rng(101);
  const ChunkConfig configs[] = {ChunkConfig::toy(), {256, 256, 16, 4, 16}, {1024, 1024, 64, 4, 2}};
  std::size_t failures = 0;
  for (const ChunkConfig& cfg : configs) {
    for (std::size_t i = 0; i < kRoundTripImages; ++i) {
      const GlyphImage image = random_image(cfg.height, cfg.width, rng, 1 + static_cast<int>(i % 7));
      if (!(assemble_image(chunk_image(image, cfg), cfg) == image)) ++failures;
    }
  }
  const double seconds = cpu_seconds() - start;
  return {failures == 0 && seconds < kRoundTripSeconds,
          std::to_string(3 * kRoundTripImages) + " images, " + std::to_string(failures) +
              " mismatches, " + fmt("%.1f s", seconds)};
}

Outcome constant_token_count() {
  const ChunkConfig r256 = ChunkConfig::res256();
  const ChunkConfig r1024 = ChunkConfig::res1024();
  std::mt19937_64 rng(102);
  const ChunkedGlyph c256 = chunk_image(random_image(256, 256, rng), r256);
  const ChunkedGlyph c1024 = chunk_image(random_image(1024, 1024, rng), r1024);
  Codebook b256(r256, rng), b1024(r1024, rng);
  const std::size_t e256 = block_embedding(c256.block(0), b256).size();
  const std::size_t e1024 = block_embedding(c1024.block(0), b1024).size();
  const bool pass = r256.tokens() == 256 && r1024.tokens() == 256 && c256.blocks == 256 &&
                    c1024.blocks == 256 && r256.token_dim() == 256 && r1024.token_dim() == 512 &&
                    e256 == 256 && e1024 == 512;
  return {pass, "N = " + std::to_string(c256.blocks) + " / " + std::to_string(c1024.blocks) +
                    ", D_t = " + std::to_string(e256) + " / " + std::to_string(e1024)};
}

// ---------------------------------------------------------------- 3, 4

// Non-blank encoder rows must not move when blank rows change. Blank rows
// carry their own content through the residual path, so they are excluded.
Outcome mask_invisibility() {
  std::mt19937_64 rng(103);
  const ModelConfig cfg = toy_model();
  FontModel model(cfg, 103);
  std::normal_distribution<double> normal(0.0, 3.0);
  double worst = 0.0;
  double worst_downstream = 0.0;
  std::size_t perturbed = 0;
  for (std::size_t trial = 0; trial < kMaskCases; ++trial) {
    GlyphImage image = random_image(32, 32, rng, 2);
    const std::size_t blanks = 1 + rng() % 8;
    for (std::size_t i = 0; i < blanks; ++i) clear_block(image, cfg.chunk, rng() % cfg.chunk.tokens());
    const GlyphSequence clean = build_glyph_sequence(image, random_meta(1, 1 + rng() % 8, rng),
                                                     model.codebook, model.tables, cfg.chunk);
    GlyphSequence noisy = clean;
    for (std::size_t r = 0; r < noisy.tokens.rows(); ++r) {
      if (!noisy.blank_flags[r]) continue;
      for (std::size_t c = 0; c < noisy.tokens.cols(); ++c) noisy.tokens(r, c) += normal(rng);
      ++perturbed;
    }
    const Tensor a = encoder_forward(std::span<const GlyphSequence>(&clean, 1), model.parallel);
    const Tensor b = encoder_forward(std::span<const GlyphSequence>(&noisy, 1), model.parallel);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      if (!clean.blank_flags[r]) worst = std::max(worst, max_row_diff(a, b, r));
    }

    // Downstream: the decoder reads the memory through the blank-key mask.
    const std::size_t n = cfg.chunk.tokens();
    const Tensor queries = Tensor::matrix(2 * n, a.cols());
    const std::vector<std::size_t> positions = glyph_positions(2, n);
    const AttentionMask self = parallel_self_mask(std::vector<bool>(n, false));
    const AttentionMask cross = cross_mask(2 * n, clean.blank_flags);
    const Tensor da = decoder_forward(queries, positions, a, self, cross, model.parallel);
    const Tensor db = decoder_forward(queries, positions, b, self, cross, model.parallel);
    worst_downstream = std::max(worst_downstream, max_abs_diff(da, db));
  }
  const double overall = std::max(worst, worst_downstream);
  return {overall < kMaskTolerance && perturbed > 0,
          std::to_string(kMaskCases) + " cases, " + std::to_string(perturbed) +
              " blank rows perturbed, max diff " + fmt("%.3g", worst) + " (encoder), " +
              fmt("%.3g", worst_downstream) + " (decoder)"};
}

Outcome causality() {
  std::mt19937_64 rng(104);
  const ModelConfig cfg = toy_model();
  FontModel model(cfg, 104);
  const std::size_t n = cfg.chunk.tokens();
  const std::size_t d = cfg.d_token();
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::vector<std::size_t> positions = glyph_positions(2, n);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kMaskCases; ++trial) {
    Tensor tokens = Tensor::matrix(2 * n, d);
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = normal(rng);
    Tensor memory = Tensor::matrix(n, d);
    for (std::size_t i = 0; i < memory.size(); ++i) memory[i] = normal(rng);
    std::vector<bool> source_blank(n), target_blank(n), memory_blank(n);
    for (std::size_t i = 0; i < n; ++i) {
      source_blank[i] = rng() % 5 == 0;
      target_blank[i] = rng() % 5 == 0;
      memory_blank[i] = rng() % 5 == 0;
    }
    const AttentionMask self = serial_self_mask(source_blank, target_blank);
    const AttentionMask cross = cross_mask(2 * n, memory_blank);
    const Tensor a = decoder_forward(tokens, positions, memory, self, cross, model.serial);
    // Perturb every latter-half slot after `cut`.
    const std::size_t cut = rng() % n;
    for (std::size_t r = n + cut + 1; r < 2 * n; ++r)
      for (std::size_t c = 0; c < d; ++c) tokens(r, c) += 4.0 * normal(rng);
    const Tensor b = decoder_forward(tokens, positions, memory, self, cross, model.serial);
    for (std::size_t r = 0; r <= n + cut; ++r) worst = std::max(worst, max_row_diff(a, b, r));
    const Tensor pa = generate_patches(a, model.serial);
    const Tensor pb = generate_patches(b, model.serial);
    for (std::size_t r = 0; r <= n + cut; ++r) worst = std::max(worst, max_row_diff(pa, pb, r));
  }
  return {worst < kMaskTolerance,
          std::to_string(kMaskCases) + " cases, max prefix diff " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 5, 6

Outcome gradient_fidelity() {
  const double start = cpu_seconds();
  const std::vector<GradCheckCase> cases = run_gradcheck_suite(kGradTolerance, kGradStep);
  const double seconds = cpu_seconds() - start;
  bool all = !cases.empty();
  std::string detail;
  for (const GradCheckCase& c : cases) {
    all = all && c.passed;
    detail += c.name + " " + fmt("%.2g", c.result.max_rel_error) + ", ";
  }
  return {all && seconds < kGradSeconds, detail + fmt("%.1f s", seconds)};
}

Outcome lr_schedule_values() {
  struct Point {
    std::size_t step;
    double approx;  // four significant digits
  };
  const Point points[] = {{1, 5.906e-6}, {400, 2.362e-3}, {1600, 1.181e-3}};
  bool pass = true;
  std::string detail;
  for (const Point& p : points) {
    const double s = static_cast<double>(p.step);
    const double oracle = 1.0 / std::sqrt(448.0) * std::min(1.0 / std::sqrt(s), s / (400.0 * std::sqrt(400.0)));
    const double value = lr_schedule(p.step, 448, 400, 1.0, LrForm::kStandard);
    const double rel = std::abs(value - oracle) / oracle;
    const double half_digit = 0.5 * std::pow(10.0, std::floor(std::log10(p.approx)) - 3);
    pass = pass && rel < kLrRelTolerance && std::abs(value - p.approx) <= half_digit;
    detail += "step " + std::to_string(p.step) + " " + fmt("%.6e", value) + " (rel " + fmt("%.1e", rel) + "), ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

// ---------------------------------------------------------------- 7, 8, 9, 10

struct OverfitRun {
  Corpus corpus;
  SplitSpec split;
  TrainingLog log;
  Checkpoint ckpt;
  double seconds = 0.0;
};

OverfitRun run_overfit() {
  const double start = cpu_seconds();
  OverfitRun run;
  run.corpus = gen_toy_corpus(ToyCorpusSpec::parse(kOverfitCorpus));
  run.split.pretrain_styles = {0, 1};
  run.ckpt = pretrain(run.corpus, run.split, TrainConfig::from_text(kOverfitConfig), &run.log);
  run.seconds = cpu_seconds() - start;
  return run;
}

struct FewShotRun {
  Corpus corpus;
  SplitSpec split;
  TrainingLog pretrain_log;
  TrainingLog finetune_log;
  Checkpoint finetuned;
  double finetuned_mae = 0.0;
  double baseline_mae = 0.0;
  double copy_mae = 0.0;
  double parallel_mae = 0.0;
  double seconds = 0.0;
};

FewShotRun run_few_shot() {
  const double start = cpu_seconds();
  FewShotRun run;
  run.corpus = gen_toy_corpus(ToyCorpusSpec::parse(kFewShotCorpus));
  run.split.pretrain_styles = {0, 1, 2, 3, 4};
  run.split.finetune_styles = {5};
  for (std::size_t c = 1; c <= 10; ++c) run.split.finetune_chars.push_back(c);
  for (std::size_t c = 11; c <= 40; ++c) run.split.test_chars.push_back(c);

  const Checkpoint base = pretrain(run.corpus, run.split, TrainConfig::from_text(kFewShotPretrain), &run.pretrain_log);
  const TrainConfig ft_cfg = TrainConfig::from_text(kFewShotFinetune);
  run.finetuned = finetune(base, run.corpus, run.split, ft_cfg, &run.finetune_log);
  // Baseline: the pretrained model with a fresh style row and no updates.
  TrainConfig none = ft_cfg;
  none.finetune_epochs = 0;
  const Checkpoint untuned = finetune(base, run.corpus, run.split, none);

  run.finetuned_mae = evaluate(run.finetuned, run.corpus, run.split).mean_mae;
  run.baseline_mae = evaluate(untuned, run.corpus, run.split).mean_mae;
  run.copy_mae = evaluate(copy_source_synthesizer(), run.corpus, run.split, TaskPhase::kEvaluate,
                          run.finetuned.references, run.finetuned.seed)
                     .mean_mae;
  FontModel model = run.finetuned.model;
  run.parallel_mae = evaluate([&](const SynthesisTask& t) { return tp_forward(t, model).image; },
                              run.corpus, run.split, TaskPhase::kEvaluate, run.finetuned.references,
                              run.finetuned.seed)
                         .mean_mae;
  run.seconds = cpu_seconds() - start;
  return run;
}

std::optional<OverfitRun> g_overfit;
std::optional<FewShotRun> g_few_shot;

const OverfitRun& overfit_run() {
  if (!g_overfit) g_overfit = run_overfit();
  return *g_overfit;
}

const FewShotRun& few_shot_run() {
  if (!g_few_shot) g_few_shot = run_few_shot();
  return *g_few_shot;
}

Outcome overfit_fixture() {
  const OverfitRun& run = overfit_run();
  FontModel model = run.ckpt.model;
  const std::size_t refs = run.ckpt.references;
  const double ts = evaluate([&](const SynthesisTask& t) { return synthesize(t, model); }, run.corpus,
                             run.split, TaskPhase::kPretrain, refs, run.ckpt.seed)
                        .mean_mae;
  const double tp = evaluate([&](const SynthesisTask& t) { return tp_forward(t, model).image; },
                             run.corpus, run.split, TaskPhase::kPretrain, refs, run.ckpt.seed)
                        .mean_mae;
  const std::size_t steps = run.log.lines.size();
  const bool pass = steps <= kOverfitMaxSteps && run.seconds < kOverfitSeconds && ts < kOverfitMae && ts <= tp &&
                    model.config().parallel.d_model <= 128;
  return {pass, "MAE I_Ts " + fmt("%.4f", ts) + ", I_Tp " + fmt("%.4f", tp) + ", " + std::to_string(steps) +
                    " steps, " + fmt("%.1f s", run.seconds)};
}

Outcome few_shot_generalization() {
  const FewShotRun& run = few_shot_run();
  const bool pass = run.finetuned_mae < run.baseline_mae && run.finetuned_mae < run.copy_mae &&
                    run.seconds < kFewShotSeconds;
  return {pass, "test MAE " + fmt("%.4f", run.finetuned_mae) + " vs no-finetune " +
                    fmt("%.4f", run.baseline_mae) + ", copy-source " + fmt("%.4f", run.copy_mae) +
                    " (stage-1 output " + fmt("%.4f", run.parallel_mae) + "), " + fmt("%.1f s", run.seconds)};
}

bool same_losses(const TrainingLog& a, const TrainingLog& b) {
  if (a.lines.size() != b.lines.size()) return false;
  for (std::size_t i = 0; i < a.lines.size(); ++i) {
    const LogLine& x = a.lines[i];
    const LogLine& y = b.lines[i];
    if (x.step != y.step || x.stage != y.stage) return false;
    if (std::memcmp(&x.loss, &y.loss, sizeof(double)) != 0) return false;
    if (std::memcmp(&x.lr, &y.lr, sizeof(double)) != 0) return false;
  }
  return true;
}

Outcome determinism() {
  const OverfitRun& first7 = overfit_run();
  const FewShotRun& first8 = few_shot_run();
  const OverfitRun again7 = run_overfit();
  const FewShotRun again8 = run_few_shot();
  const bool logs7 = same_losses(first7.log, again7.log);
  const bool logs8 = same_losses(first8.pretrain_log, again8.pretrain_log) &&
                     same_losses(first8.finetune_log, again8.finetune_log);
  const bool ckpts = checkpoint_digest(first7.ckpt) == checkpoint_digest(again7.ckpt) &&
                     checkpoint_digest(first8.finetuned) == checkpoint_digest(again8.finetuned);
  const std::size_t lines =
      first7.log.lines.size() + first8.pretrain_log.lines.size() + first8.finetune_log.lines.size();
  return {logs7 && logs8 && ckpts, std::to_string(lines) + " logged losses; overfit " +
                                       (logs7 ? "identical" : "DIFFER") + ", few-shot " +
                                       (logs8 ? "identical" : "DIFFER") + ", checkpoints " +
                                       (ckpts ? "identical" : "DIFFER")};
}

Outcome checkpoint_round_trip() {
  const Checkpoint& trained = overfit_run().ckpt;
  const fs::path path = fs::temp_directory_path() / ("glyphstack_acceptance_" + std::to_string(std::random_device{}()) + ".ftck");
  save_checkpoint(trained, path);
  const Checkpoint loaded = load_checkpoint(path, trained.model.chunk());
  fs::remove(path);
  const bool bytes_equal = serialize_checkpoint(trained) == serialize_checkpoint(loaded);

  FontModel before = trained.model;
  FontModel after = loaded.model;
  const ModelConfig& cfg = before.config();
  std::mt19937_64 rng(110);
  std::size_t equal = 0;
  for (std::size_t i = 0; i < kCheckpointTasks; ++i) {
    SynthesisTask task;
    const std::size_t style = 1 + rng() % (cfg.style_rows - 1);
    const std::size_t ch = 1 + rng() % cfg.chars;
    task.target = random_meta(style, ch, rng);
    task.source = random_image(32, 32, rng, 2);
    const std::size_t k = 1 + rng() % 4;
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t other = 1 + (ch + r) % cfg.chars;
      if (other == ch) continue;
      task.references.push_back({random_image(32, 32, rng, 2), random_meta(style, other, rng)});
    }
    const SynthesisResult a = synthesize_stages(task, before);
    const SynthesisResult b = synthesize_stages(task, after);
    if (bitwise_equal(a.parallel.patches, b.parallel.patches) && bitwise_equal(a.serial.patches, b.serial.patches) &&
        a.serial.image == b.serial.image) {
      ++equal;
    }
  }
  return {bytes_equal && equal == kCheckpointTasks,
          std::to_string(equal) + "/" + std::to_string(kCheckpointTasks) + " tasks bitwise equal, re-serialized bytes " +
              (bytes_equal ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "codec round-trip", codec_round_trip},
      {2, "constant token count", constant_token_count},
      {3, "mask invisibility", mask_invisibility},
      {4, "causality", causality},
      {5, "gradient fidelity", gradient_fidelity},
      {6, "lr schedule", lr_schedule_values},
      {7, "overfit fixture", overfit_fixture},
      {8, "few-shot generalization", few_shot_generalization},
      {9, "determinism", determinism},
      {10, "checkpoint round-trip", checkpoint_round_trip},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("criterion %d %s: %s (%s)\n", c.id, c.name, outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
