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

#include "glyphstack/dataset.hpp"
#include "glyphstack/image.hpp"

namespace glyphstack {

// Parsed from `styles=6, chars=40, size=32, seed=1`. Style 0 is the source
// font and always uses the identity transform.
struct ToyCorpusSpec {
  std::size_t styles = 2;
  std::size_t chars = 8;
  std::size_t size = 32;
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_text() const;
  static ToyCorpusSpec parse(const std::string& text);
  static ToyCorpusSpec load(const std::filesystem::path& path);
};

// One stroke between two points of a 5 x 5 lattice, (row, col) in 0..4.
struct Stroke {
  int r0, c0, r1, c1;
  bool operator==(const Stroke&) const = default;
};
using Skeleton = std::vector<Stroke>;

// Brush (stroke half-width), layout (slant) and scale/placement, in units of
// a 32-pixel glyph.
struct StyleTransform {
  double half_width = 1.0;
  double slant = 0.0;
  double scale = 1.0;
  double dx = 0.0;
  double dy = 0.0;

  static StyleTransform identity() { return {}; }
  bool is_identity() const;
};

Skeleton char_skeleton(std::uint64_t seed, std::size_t char_id);
StyleTransform style_transform(std::uint64_t seed, std::size_t style_id);
// Four letters from stroke count, orientation histogram and extent.
std::string skeleton_wubi(const Skeleton& skeleton);

GlyphImage render_skeleton(const Skeleton& skeleton, std::size_t size);
GlyphImage render_glyph(const Skeleton& skeleton, const StyleTransform& style, std::size_t size);

// Every (style, char) pair, styles 0..styles-1 and chars 1..chars. Paths are
// relative file names; nothing touches the filesystem.
Corpus gen_toy_corpus(const ToyCorpusSpec& spec);
// Writes P4 files plus manifest.tsv into dir; returns the manifest path.
std::filesystem::path write_toy_corpus(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace glyphstack
