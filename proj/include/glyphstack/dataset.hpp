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
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "glyphstack/codec.hpp"
#include "glyphstack/image.hpp"
#include "glyphstack/pipeline.hpp"

namespace glyphstack {

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory unless absolute
  std::size_t style_id = 0;
  std::size_t char_id = 0;
  std::string wubi;
  std::size_t line = 0;  // 1-based line in the manifest file, 0 if built in memory
};

// TSV with header `path  style_id  char_id  wubi`. An optional leading
// `#size=HxW` line declares the geometry; otherwise it is read from the first
// image.
struct CorpusManifest {
  std::filesystem::path root;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
  std::vector<std::size_t> styles() const;
  std::vector<std::size_t> chars() const;
  std::size_t max_style() const;
  std::size_t max_char() const;
};

// Validates row syntax, wubi codes, unique (style, char) keys and that files
// exist; every problem is reported with its line number in one DataError.
CorpusManifest load_manifest(const std::filesystem::path& path);
CorpusManifest parse_manifest(const std::string& text, const std::filesystem::path& root,
                              bool check_files = true);
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

// Manifest plus decoded images, addressable by (style, char).
class Corpus {
 public:
  Corpus() = default;
  Corpus(CorpusManifest manifest, std::vector<GlyphImage> images);

  const CorpusManifest& manifest() const { return manifest_; }
  std::size_t size() const { return images_.size(); }
  bool has(std::size_t style_id, std::size_t char_id) const;
  const GlyphImage& image(std::size_t style_id, std::size_t char_id) const;
  GlyphMeta meta(std::size_t style_id, std::size_t char_id) const;
  std::vector<std::size_t> chars_of_style(std::size_t style_id) const;

 private:
  std::size_t find(std::size_t style_id, std::size_t char_id) const;

  CorpusManifest manifest_;
  std::vector<GlyphImage> images_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index_;
};

Corpus load_corpus(const CorpusManifest& manifest);

// Which styles train where, and how the fine-tune style's characters split
// into the few-shot set and the held-out test set. Style 0 is always the
// source font.
struct SplitSpec {
  std::vector<std::size_t> pretrain_styles;
  std::vector<std::size_t> finetune_styles;
  std::vector<std::size_t> finetune_chars;
  std::vector<std::size_t> test_chars;

  void validate() const;
  std::string to_text() const;
  std::string digest() const;
  static SplitSpec parse(const std::string& text);
  static SplitSpec load(const std::filesystem::path& path);
};

enum class TaskPhase { kPretrain, kFinetune, kEvaluate };

// (style, char) targets whose glyphs carry loss in the given phase.
std::vector<std::pair<std::size_t, std::size_t>> phase_targets(const Corpus& corpus,
                                                               const SplitSpec& split,
                                                               TaskPhase phase);

// Builds one task with k references drawn without replacement from the
// characters the phase allows. Rejects any training task whose loss target
// is a test character of a fine-tune style.
SynthesisTask make_task(const Corpus& corpus, const SplitSpec& split, TaskPhase phase,
                        std::size_t style_id, std::size_t char_id, std::size_t k,
                        std::mt19937_64& rng);

}  // namespace glyphstack
