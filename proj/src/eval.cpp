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

#include "glyphstack/eval.hpp"

#include <fstream>

#include "glyphstack/error.hpp"
#include "glyphstack/keyvalue.hpp"
#include "glyphstack/pipeline.hpp"

namespace glyphstack {

namespace {

constexpr std::uint64_t kEvalStream = 0xE7A1ULL;

}  // namespace

double mae(const GlyphImage& pred, const GlyphImage& target) {
  if (pred.height() != target.height() || pred.width() != target.width()) {
    throw ShapeError("mae: geometry " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                     " vs " + std::to_string(target.height()) + "x" + std::to_string(target.width()));
  }
  if (pred.size() == 0) throw ShapeError("mae: empty images");
  std::size_t differing = 0;
  const auto a = pred.pixels();
  const auto b = target.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
  return static_cast<double>(differing) / static_cast<double>(a.size());
}

double pixel_accuracy(const GlyphImage& pred, const GlyphImage& target) { return 1.0 - mae(pred, target); }

std::string EvalReport::to_tsv() const {
  std::string out;
  out += "# checkpoint_digest=" + checkpoint_digest + "\n";
  out += "# config_digest=" + config_digest + "\n";
  out += "# split_digest=" + split_digest + "\n";
  out += "# seed=" + std::to_string(seed) + "\n";
  out += "# references=" + std::to_string(references) + "\n";
  out += "# glyphs=" + std::to_string(rows.size()) + "\n";
  out += "# mean_mae=" + format_double(mean_mae) + "\n";
  out += "# mean_pixel_acc=" + format_double(mean_pixel_acc) + "\n";
  out += "# fid=not computed\n";
  out += "# acc_style=not computed\n";
  out += "# acc_content=not computed\n";
  out += "style_id\tchar_id\tmae\tpixel_acc\n";
  for (const EvalRow& r : rows) {
    out += std::to_string(r.style_id) + '\t' + std::to_string(r.char_id) + '\t' + format_double(r.mae) + '\t' +
           format_double(r.pixel_acc) + '\n';
  }
  return out;
}

void EvalReport::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  out << to_tsv();
  if (!out) throw DataError("report write failed: " + path.string());
}

EvalReport evaluate(const Synthesizer& synth, const Corpus& corpus, const SplitSpec& split, TaskPhase phase,
                    std::size_t references, std::uint64_t seed) {
  const auto targets = phase_targets(corpus, split, phase);
  if (targets.empty()) throw DataError("evaluate: no glyphs to evaluate in this split");
  EvalReport report;
  report.split_digest = split.digest();
  report.seed = seed;
  report.references = references;
  std::mt19937_64 rng(seed ^ kEvalStream);
  for (const auto& [style, ch] : targets) {
    const SynthesisTask task = make_task(corpus, split, phase, style, ch, references, rng);
    const GlyphImage out = synth(task);
    EvalRow row{style, ch, mae(out, *task.ground_truth), 0.0};
    row.pixel_acc = 1.0 - row.mae;
    report.rows.push_back(row);
    report.mean_mae += row.mae;
  }
  report.mean_mae /= static_cast<double>(report.rows.size());
  report.mean_pixel_acc = 1.0 - report.mean_mae;
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const Corpus& corpus, const SplitSpec& split, TaskPhase phase) {
  if (!(ckpt.model.chunk().height == corpus.manifest().height &&
        ckpt.model.chunk().width == corpus.manifest().width)) {
    throw DataError("evaluate: corpus geometry differs from the checkpoint");
  }
  FontModel model = ckpt.model;
  for (const auto& [style, ch] : phase_targets(corpus, split, phase)) {
    if (style >= model.config().style_rows || ch > model.config().chars) {
      throw DataError("evaluate: checkpoint has no embedding for (style " + std::to_string(style) + ", char " +
                      std::to_string(ch) + ")");
    }
  }
  EvalReport report = evaluate([&](const SynthesisTask& task) { return synthesize(task, model); }, corpus, split,
                               phase, ckpt.references, ckpt.seed);
  report.checkpoint_digest = checkpoint_digest(ckpt);
  report.config_digest = ckpt.config_digest;
  return report;
}

Synthesizer copy_source_synthesizer() {
  return [](const SynthesisTask& task) { return task.source; };
}

}  // namespace glyphstack
