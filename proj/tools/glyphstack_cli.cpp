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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "glyphstack/checkpoint.hpp"
#include "glyphstack/codec.hpp"
#include "glyphstack/dataset.hpp"
#include "glyphstack/error.hpp"
#include "glyphstack/eval.hpp"
#include "glyphstack/gradcheck_suite.hpp"
#include "glyphstack/keyvalue.hpp"
#include "glyphstack/pipeline.hpp"
#include "glyphstack/pnm.hpp"
#include "glyphstack/toy_corpus.hpp"
#include "glyphstack/trainer.hpp"

namespace fs = std::filesystem;
using namespace glyphstack;

namespace {

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  return text;
}

int fail(const char* kind, int code, const std::string& message) {
  std::cerr << "glyphstack: error=" << kind << " exit=" << code << " reason=\"" << one_line(message) << "\"\n";
  return code;
}

// Inline `key=value` text, or a path to a file holding it.
std::string text_or_file(const std::string& arg) {
  if (fs::exists(arg)) {
    std::ifstream in(arg, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  if (arg.find('=') != std::string::npos) return arg;
  throw DataError("no such file: " + arg);
}

void log_run(const std::string& command, const std::string& config_digest, std::uint64_t seed) {
  std::cout << "# command=" << command << " config_digest=" << config_digest << " seed=" << seed << "\n";
}

ChunkConfig chunk_for(std::size_t h, std::size_t w, std::size_t block, std::size_t patch,
                      std::size_t patch_dim) {
  if (block == 0) {
    for (const ChunkConfig& preset : {ChunkConfig::toy(), ChunkConfig::res256(), ChunkConfig::res1024()}) {
      if (preset.height == h && preset.width == w) return preset;
    }
    throw UsageError("no preset chunking for " + std::to_string(h) + "x" + std::to_string(w) +
                     "; pass --block and --patch");
  }
  ChunkConfig cfg{h, w, block, patch, patch_dim};
  cfg.validate();
  return cfg;
}

struct Options {
  std::string spec, out, manifest, split, config, ckpt, refs, log, phase = "test";
  std::size_t style = 0, char_id = 0, block = 0, patch = 4, patch_dim = 4;
  bool ascii = false;
  double tolerance = 1e-5;
  std::uint64_t seed = 7;
};

int cmd_gen_toy(const Options& o) {
  const ToyCorpusSpec spec = ToyCorpusSpec::parse(text_or_file(o.spec));
  log_run("gen-toy", hex64(fnv1a64(spec.to_text())), spec.seed);
  const Corpus corpus = gen_toy_corpus(spec);
  const fs::path manifest = write_toy_corpus(corpus, o.out);
  std::cout << "wrote " << corpus.size() << " glyphs, manifest " << manifest.string() << "\n";
  return 0;
}

int cmd_pretrain(const Options& o) {
  const TrainConfig cfg = o.config.empty() ? TrainConfig::paper() : TrainConfig::from_text(text_or_file(o.config));
  const SplitSpec split = SplitSpec::parse(text_or_file(o.split));
  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  log_run("pretrain", cfg.digest(), cfg.seed);
  TrainingLog log;
  if (!o.log.empty()) {
    log.sink = o.log;
    std::ofstream(o.log, std::ios::trunc);
  }
  const Checkpoint ckpt = pretrain(corpus, split, cfg, &log);
  save_checkpoint(ckpt, o.out);
  std::cout << "steps=" << log.lines.size() << " final_tp_loss=" << format_double(log.losses("pretrain_tp").back())
            << " final_ts_loss=" << format_double(log.losses("pretrain_ts").back())
            << " checkpoint_digest=" << checkpoint_digest(ckpt) << "\n";
  return 0;
}

int cmd_finetune(const Options& o) {
  const TrainConfig cfg = o.config.empty() ? TrainConfig::paper() : TrainConfig::from_text(text_or_file(o.config));
  const SplitSpec split = SplitSpec::parse(text_or_file(o.split));
  const CorpusManifest manifest = load_manifest(o.manifest);
  const Checkpoint base = load_checkpoint(o.ckpt);
  const Corpus corpus = load_corpus(manifest);
  log_run("finetune", cfg.digest(), cfg.seed);
  TrainingLog log;
  if (!o.log.empty()) {
    log.sink = o.log;
    std::ofstream(o.log, std::ios::trunc);
  }
  const Checkpoint ckpt = finetune(base, corpus, split, cfg, &log);
  save_checkpoint(ckpt, o.out);
  std::cout << "steps=" << log.lines.size() << " checkpoint_digest=" << checkpoint_digest(ckpt) << "\n";
  return 0;
}

int cmd_synthesize(const Options& o) {
  Checkpoint ckpt = load_checkpoint(o.ckpt);
  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  log_run("synthesize", ckpt.config_digest, ckpt.seed);
  const std::vector<std::size_t> refs = parse_sizes(o.refs);
  if (refs.empty()) throw UsageError("--refs needs at least one char id");
  if (o.style >= ckpt.model.config().style_rows || o.char_id == 0 || o.char_id > ckpt.model.config().chars) {
    throw DataError("checkpoint has no embedding for (style " + std::to_string(o.style) + ", char " +
                    std::to_string(o.char_id) + ")");
  }
  SynthesisTask task;
  task.source = corpus.image(0, o.char_id);
  task.target = corpus.meta(0, o.char_id);
  task.target.style_id = o.style;
  for (std::size_t c : refs) task.references.push_back({corpus.image(o.style, c), corpus.meta(o.style, c)});
  const GlyphImage out = synthesize(task, ckpt.model);
  write_pbm(o.out, out, !o.ascii);
  std::cout << "wrote " << o.out << " (" << out.height() << "x" << out.width() << ")\n";
  return 0;
}

int cmd_eval(const Options& o) {
  const Checkpoint ckpt = load_checkpoint(o.ckpt);
  const SplitSpec split = SplitSpec::parse(text_or_file(o.split));
  const Corpus corpus = load_corpus(load_manifest(o.manifest));
  log_run("eval", ckpt.config_digest, ckpt.seed);
  TaskPhase phase = TaskPhase::kEvaluate;
  if (o.phase == "finetune") {
    phase = TaskPhase::kFinetune;
  } else if (o.phase == "pretrain") {
    phase = TaskPhase::kPretrain;
  } else if (o.phase != "test") {
    throw UsageError("--phase must be test, finetune or pretrain");
  }
  const EvalReport report = evaluate(ckpt, corpus, split, phase);
  report.write(o.out);
  std::cout << "glyphs=" << report.rows.size() << " mean_mae=" << format_double(report.mean_mae)
            << " mean_pixel_acc=" << format_double(report.mean_pixel_acc) << "\n";
  return 0;
}

int cmd_codec_roundtrip(const Options& o) {
  const CorpusManifest manifest = load_manifest(o.manifest);
  const ChunkConfig cfg = chunk_for(manifest.height, manifest.width, o.block, o.patch, o.patch_dim);
  log_run("codec-roundtrip", hex64(fnv1a64(chunk_string(cfg))), 0);
  std::size_t failures = 0;
  std::string first;
  for (const ManifestEntry& e : manifest.entries) {
    const GlyphImage image = load_glyph(manifest.resolve(e), manifest.height, manifest.width);
    if (!(assemble_image(chunk_image(image, cfg), cfg) == image)) {
      if (failures++ == 0) first = e.path;
    }
  }
  if (failures) {
    return fail("roundtrip_mismatch", 2, std::to_string(failures) + " glyphs failed, first " + first);
  }
  std::cout << "roundtrip ok glyphs=" << manifest.entries.size() << " chunk=" << chunk_string(cfg) << "\n";
  return 0;
}

int cmd_grad_check(const Options& o) {
  log_run("grad-check", hex64(fnv1a64(format_double(o.tolerance))), o.seed);
  bool ok = true;
  for (const GradCheckCase& c : run_gradcheck_suite(o.tolerance, 1e-6, 1e-3, o.seed)) {
    std::printf("%-22s max_rel_error=%.3e coords=%zu worst=%s[%zu] %s\n", c.name.c_str(), c.result.max_rel_error,
                c.result.coordinates, c.result.worst_parameter.c_str(), c.result.worst_index,
                c.passed ? "ok" : "VIOLATION");
    ok = ok && c.passed;
  }
  std::fflush(stdout);
  if (!ok) return fail("gradient_violation", 3, "finite-difference check exceeded tolerance");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glyphstack: chunked-glyph font synthesis with stacked transformers"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-toy", "Generate a procedural toy corpus");
  gen->add_option("--spec", o.spec, "Spec file or inline `styles=.., chars=.., size=.., seed=..`")->required();
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* pre = app.add_subcommand("pretrain", "Pretrain both stages");
  pre->add_option("--manifest", o.manifest)->required();
  pre->add_option("--split", o.split)->required();
  pre->add_option("--config", o.config, "Train config file or inline text (default: paper profile)");
  pre->add_option("--out", o.out)->required();
  pre->add_option("--log", o.log, "Training log path");

  auto* fin = app.add_subcommand("finetune", "Fine-tune on the split's few-shot set");
  fin->add_option("--ckpt", o.ckpt)->required();
  fin->add_option("--manifest", o.manifest)->required();
  fin->add_option("--split", o.split)->required();
  fin->add_option("--config", o.config);
  fin->add_option("--out", o.out)->required();
  fin->add_option("--log", o.log);

  auto* syn = app.add_subcommand("synthesize", "Synthesize one glyph");
  syn->add_option("--ckpt", o.ckpt)->required();
  syn->add_option("--manifest", o.manifest, "Corpus holding the source and reference glyphs")->required();
  syn->add_option("--char", o.char_id)->required();
  syn->add_option("--style", o.style)->required();
  syn->add_option("--refs", o.refs, "Reference char ids in the target style, e.g. 2,3,5")->required();
  syn->add_option("--out", o.out)->required();
  syn->add_flag("--ascii", o.ascii, "Write P1 instead of P4");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--ckpt", o.ckpt)->required();
  ev->add_option("--manifest", o.manifest)->required();
  ev->add_option("--split", o.split)->required();
  ev->add_option("--out", o.out)->required();
  ev->add_option("--phase", o.phase, "test (default), finetune or pretrain");

  auto* rt = app.add_subcommand("codec-roundtrip", "Check assemble(chunk(I)) = I over a corpus");
  rt->add_option("--manifest", o.manifest)->required();
  rt->add_option("--block", o.block, "Block side (default: preset for the geometry)");
  rt->add_option("--patch", o.patch);
  rt->add_option("--patch-dim", o.patch_dim);

  auto* gc = app.add_subcommand("grad-check", "Run the finite-difference suite");
  gc->add_option("--tolerance", o.tolerance);
  gc->add_option("--seed", o.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return fail("usage", 1, e.what());
  }

  try {
    if (*gen) return cmd_gen_toy(o);
    if (*pre) return cmd_pretrain(o);
    if (*fin) return cmd_finetune(o);
    if (*syn) return cmd_synthesize(o);
    if (*ev) return cmd_eval(o);
    if (*rt) return cmd_codec_roundtrip(o);
    if (*gc) return cmd_grad_check(o);
  } catch (const UsageError& e) {
    return fail("usage", 1, e.what());
  } catch (const DataError& e) {
    return fail("data", 2, e.what());
  } catch (const NumericFault& e) {
    return fail("numeric", 3, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 2, e.what());
  }
  return fail("usage", 1, "no subcommand");
}
