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

#include "glyphstack/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "glyphstack/error.hpp"
#include "glyphstack/keyvalue.hpp"
#include "glyphstack/pnm.hpp"

namespace glyphstack {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

bool parse_id(const std::string& text, std::size_t& out) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), ::isdigit)) return false;
  try {
    out = std::stoull(text);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

bool contains(const std::vector<std::size_t>& values, std::size_t v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::string pair_name(std::size_t style, std::size_t ch) {
  return "(style " + std::to_string(style) + ", char " + std::to_string(ch) + ")";
}

}  // namespace

// ---------------------------------------------------------------- manifest

std::filesystem::path CorpusManifest::resolve(const ManifestEntry& entry) const {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : root / p;
}

std::vector<std::size_t> CorpusManifest::styles() const {
  std::set<std::size_t> s;
  for (const auto& e : entries) s.insert(e.style_id);
  return {s.begin(), s.end()};
}

std::vector<std::size_t> CorpusManifest::chars() const {
  std::set<std::size_t> s;
  for (const auto& e : entries) s.insert(e.char_id);
  return {s.begin(), s.end()};
}

std::size_t CorpusManifest::max_style() const {
  std::size_t m = 0;
  for (const auto& e : entries) m = std::max(m, e.style_id);
  return m;
}

std::size_t CorpusManifest::max_char() const {
  std::size_t m = 0;
  for (const auto& e : entries) m = std::max(m, e.char_id);
  return m;
}

CorpusManifest parse_manifest(const std::string& text, const std::filesystem::path& root,
                              bool check_files) {
  CorpusManifest manifest;
  manifest.root = root;
  std::vector<std::string> problems;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const KeyValues kv = KeyValues::parse(line.substr(1));
      if (kv.has("size")) {
        const std::string& size = kv.get("size");
        const auto x = size.find('x');
        std::size_t h = 0, w = 0;
        if (x == std::string::npos || !parse_id(size.substr(0, x), h) ||
            !parse_id(size.substr(x + 1), w) || h == 0 || w == 0) {
          problems.push_back("line " + std::to_string(line_no) + ": bad size declaration '" + size + "'");
        } else {
          manifest.height = h;
          manifest.width = w;
        }
      }
      continue;
    }
    const std::vector<std::string> cols = split_tabs(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() == 4 && cols[0] == "path" && cols[1] == "style_id" && cols[2] == "char_id" &&
          cols[3] == "wubi") {
        continue;
      }
      problems.push_back("line " + std::to_string(line_no) +
                         ": expected header 'path<TAB>style_id<TAB>char_id<TAB>wubi'");
      break;
    }
    if (cols.size() != 4) {
      problems.push_back("line " + std::to_string(line_no) + ": expected 4 tab-separated columns, got " +
                         std::to_string(cols.size()));
      continue;
    }
    ManifestEntry entry;
    entry.path = cols[0];
    entry.wubi = cols[3];
    entry.line = line_no;
    bool ok = true;
    if (entry.path.empty()) {
      problems.push_back("line " + std::to_string(line_no) + ": empty path");
      ok = false;
    }
    if (!parse_id(cols[1], entry.style_id)) {
      problems.push_back("line " + std::to_string(line_no) + ": bad style_id '" + cols[1] + "'");
      ok = false;
    }
    if (!parse_id(cols[2], entry.char_id) || entry.char_id == 0) {
      problems.push_back("line " + std::to_string(line_no) + ": bad char_id '" + cols[2] +
                         "' (ids start at 1)");
      ok = false;
    }
    try {
      GlyphMeta::parse_wubi(entry.wubi);
    } catch (const DataError&) {
      problems.push_back("line " + std::to_string(line_no) + ": malformed wubi code '" + entry.wubi +
                         "' (need [a-z]{4})");
      ok = false;
    }
    if (!ok) continue;
    const auto key = std::make_pair(entry.style_id, entry.char_id);
    if (const auto it = seen.find(key); it != seen.end()) {
      problems.push_back("line " + std::to_string(line_no) + ": duplicate " +
                         pair_name(entry.style_id, entry.char_id) + ", first defined on line " +
                         std::to_string(it->second));
      continue;
    }
    seen[key] = line_no;
    if (check_files && !std::filesystem::exists(manifest.resolve(entry))) {
      problems.push_back("line " + std::to_string(line_no) + ": missing file " +
                         manifest.resolve(entry).string());
      continue;
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!header_seen && problems.empty()) problems.push_back("empty manifest");
  if (problems.empty() && manifest.entries.empty()) problems.push_back("empty manifest: no rows");
  if (!problems.empty()) {
    std::string message = "manifest: ";
    for (std::size_t i = 0; i < problems.size(); ++i) message += (i ? "; " : "") + problems[i];
    throw DataError(message);
  }
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  CorpusManifest manifest = parse_manifest(buffer.str(), path.parent_path());
  if (manifest.height == 0) {
    const PnmRaster first = read_pnm(manifest.resolve(manifest.entries.front()));
    manifest.height = first.height;
    manifest.width = first.width;
  }
  return manifest;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  if (manifest.height) out << "#size=" << manifest.height << "x" << manifest.width << "\n";
  out << "path\tstyle_id\tchar_id\twubi\n";
  for (const auto& e : manifest.entries) {
    out << e.path << '\t' << e.style_id << '\t' << e.char_id << '\t' << e.wubi << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

// ---------------------------------------------------------------- corpus

Corpus::Corpus(CorpusManifest manifest, std::vector<GlyphImage> images)
    : manifest_(std::move(manifest)), images_(std::move(images)) {
  if (images_.size() != manifest_.entries.size()) {
    throw DataError("corpus: " + std::to_string(images_.size()) + " images for " +
                    std::to_string(manifest_.entries.size()) + " manifest rows");
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const ManifestEntry& e = manifest_.entries[i];
    if (images_[i].height() != manifest_.height || images_[i].width() != manifest_.width) {
      throw DataError("corpus: glyph " + pair_name(e.style_id, e.char_id) +
                      " does not match the declared geometry");
    }
    if (!index_.emplace(std::make_pair(e.style_id, e.char_id), i).second) {
      throw DataError("corpus: duplicate " + pair_name(e.style_id, e.char_id));
    }
  }
}

std::size_t Corpus::find(std::size_t style_id, std::size_t char_id) const {
  const auto it = index_.find({style_id, char_id});
  if (it == index_.end()) throw DataError("corpus has no glyph " + pair_name(style_id, char_id));
  return it->second;
}

bool Corpus::has(std::size_t style_id, std::size_t char_id) const {
  return index_.count({style_id, char_id}) != 0;
}

const GlyphImage& Corpus::image(std::size_t style_id, std::size_t char_id) const {
  return images_[find(style_id, char_id)];
}

GlyphMeta Corpus::meta(std::size_t style_id, std::size_t char_id) const {
  const ManifestEntry& e = manifest_.entries[find(style_id, char_id)];
  return {e.style_id, e.char_id, GlyphMeta::parse_wubi(e.wubi)};
}

std::vector<std::size_t> Corpus::chars_of_style(std::size_t style_id) const {
  std::vector<std::size_t> out;
  for (const auto& [key, idx] : index_)
    if (key.first == style_id) out.push_back(key.second);
  return out;
}

Corpus load_corpus(const CorpusManifest& manifest) {
  if (manifest.height == 0 || manifest.width == 0) throw DataError("manifest declares no geometry");
  std::vector<GlyphImage> images;
  images.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    images.push_back(load_glyph(manifest.resolve(e), manifest.height, manifest.width));
  }
  return Corpus(manifest, std::move(images));
}

// ---------------------------------------------------------------- split

void SplitSpec::validate() const {
  for (std::size_t c : finetune_chars) {
    if (contains(test_chars, c)) {
      throw DataError("split: char " + std::to_string(c) + " is in both the few-shot and test sets");
    }
  }
  for (std::size_t s : finetune_styles) {
    if (s == 0) throw DataError("split: style 0 is the source font and cannot be fine-tuned");
    if (contains(pretrain_styles, s)) {
      throw DataError("split: fine-tune style " + std::to_string(s) + " also appears in pretraining");
    }
  }
}

std::string SplitSpec::to_text() const {
  KeyValues kv;
  kv.set_sizes("pretrain_styles", pretrain_styles);
  kv.set_sizes("finetune_styles", finetune_styles);
  kv.set_sizes("finetune_chars", finetune_chars);
  kv.set_sizes("test_chars", test_chars);
  return kv.to_text();
}

std::string SplitSpec::digest() const { return hex64(fnv1a64(to_text())); }

SplitSpec SplitSpec::parse(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  SplitSpec split;
  split.pretrain_styles = kv.get_sizes("pretrain_styles");
  split.finetune_styles = kv.get_sizes("finetune_styles");
  split.finetune_chars = kv.get_sizes("finetune_chars");
  split.test_chars = kv.get_sizes("test_chars");
  split.validate();
  return split;
}

SplitSpec SplitSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read split " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

// ---------------------------------------------------------------- tasks

std::vector<std::pair<std::size_t, std::size_t>> phase_targets(const Corpus& corpus,
                                                               const SplitSpec& split,
                                                               TaskPhase phase) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  switch (phase) {
    case TaskPhase::kPretrain:
      for (std::size_t s : split.pretrain_styles) {
        if (s == 0) continue;
        for (std::size_t c : corpus.chars_of_style(s))
          if (corpus.has(0, c)) out.emplace_back(s, c);
      }
      break;
    case TaskPhase::kFinetune:
    case TaskPhase::kEvaluate: {
      const auto& chars = phase == TaskPhase::kFinetune ? split.finetune_chars : split.test_chars;
      for (std::size_t s : split.finetune_styles)
        for (std::size_t c : chars)
          if (corpus.has(s, c) && corpus.has(0, c)) out.emplace_back(s, c);
      break;
    }
  }
  return out;
}

SynthesisTask make_task(const Corpus& corpus, const SplitSpec& split, TaskPhase phase,
                        std::size_t style_id, std::size_t char_id, std::size_t k,
                        std::mt19937_64& rng) {
  if (k == 0) throw DataError("make_task: k must be at least 1");
  const bool finetune_style = contains(split.finetune_styles, style_id);
  if (phase != TaskPhase::kEvaluate && finetune_style && contains(split.test_chars, char_id)) {
    throw DataError("test-set leakage: training target " + pair_name(style_id, char_id) +
                    " is a held-out test glyph");
  }

  std::vector<std::size_t> allowed;
  switch (phase) {
    case TaskPhase::kPretrain:
      if (finetune_style) {
        throw DataError("make_task: style " + std::to_string(style_id) +
                        " is reserved for fine-tuning");
      }
      allowed = corpus.chars_of_style(style_id);
      break;
    case TaskPhase::kFinetune:
      if (!finetune_style) {
        throw DataError("make_task: style " + std::to_string(style_id) + " is not a fine-tune style");
      }
      if (!contains(split.finetune_chars, char_id)) {
        throw DataError("make_task: char " + std::to_string(char_id) + " is not in the few-shot set");
      }
      allowed = split.finetune_chars;
      break;
    case TaskPhase::kEvaluate:
      allowed = finetune_style ? split.finetune_chars : corpus.chars_of_style(style_id);
      break;
  }
  std::vector<std::size_t> candidates;
  for (std::size_t c : allowed) {
    if (c != char_id && corpus.has(style_id, c)) candidates.push_back(c);
  }
  std::sort(candidates.begin(), candidates.end());
  if (candidates.size() < k) {
    throw DataError("make_task: " + std::to_string(candidates.size()) + " eligible references for " +
                    pair_name(style_id, char_id) + ", need " + std::to_string(k));
  }
  // Partial Fisher-Yates: the first k slots form the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }

  SynthesisTask task;
  task.source = corpus.image(0, char_id);
  task.target = corpus.meta(0, char_id);
  task.target.style_id = style_id;
  if (corpus.has(style_id, char_id)) task.ground_truth = corpus.image(style_id, char_id);
  for (std::size_t i = 0; i < k; ++i) {
    task.references.push_back({corpus.image(style_id, candidates[i]), corpus.meta(style_id, candidates[i])});
  }
  return task;
}

}  // namespace glyphstack
