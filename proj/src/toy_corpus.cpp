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

#include "glyphstack/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "glyphstack/error.hpp"
#include "glyphstack/keyvalue.hpp"
#include "glyphstack/pnm.hpp"

namespace glyphstack {

namespace {

constexpr int kLattice = 5;

// Portable draws: std distributions are not specified bit-for-bit.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
int below(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
double between(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(id),
                    static_cast<std::uint32_t>(id >> 32)};
  return std::mt19937_64(seq);
}

Stroke random_stroke(std::mt19937_64& rng) {
  while (true) {
    Stroke s{below(rng, kLattice), below(rng, kLattice), 0, 0};
    // Horizontal, vertical or one of the two diagonals.
    static constexpr int kDirs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    const int d = below(rng, 4);
    const int len = 2 + below(rng, 3);
    s.r1 = s.r0 + kDirs[d][0] * len;
    s.c1 = s.c0 + kDirs[d][1] * len;
    if (s.r1 >= 0 && s.r1 < kLattice && s.c1 >= 0 && s.c1 < kLattice) return s;
  }
}

double segment_distance(double py, double px, double ay, double ax, double by, double bx) {
  const double vy = by - ay, vx = bx - ax;
  const double len2 = vy * vy + vx * vx;
  double t = len2 > 0 ? ((py - ay) * vy + (px - ax) * vx) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qy = ay + t * vy - py, qx = ax + t * vx - px;
  return std::sqrt(qy * qy + qx * qx);
}

char letter(std::size_t v) { return static_cast<char>('a' + v % 26); }

}  // namespace

void ToyCorpusSpec::validate() const {
  if (styles < 2) throw UsageError("toy corpus needs at least 2 styles (style 0 is the source)");
  if (chars < 1) throw UsageError("toy corpus needs at least 1 char");
  if (size < 8) throw UsageError("toy corpus size must be at least 8");
}

std::string ToyCorpusSpec::to_text() const {
  return "styles=" + std::to_string(styles) + ", chars=" + std::to_string(chars) +
         ", size=" + std::to_string(size) + ", seed=" + std::to_string(seed);
}

ToyCorpusSpec ToyCorpusSpec::parse(const std::string& text) {
  const KeyValues kv = KeyValues::parse(text);
  for (const auto& [key, value] : kv.entries()) {
    if (key != "styles" && key != "chars" && key != "size" && key != "seed") {
      throw UsageError("toy corpus spec: unknown key '" + key + "'");
    }
  }
  ToyCorpusSpec spec;
  spec.styles = kv.get_size_or("styles", spec.styles);
  spec.chars = kv.get_size_or("chars", spec.chars);
  spec.size = kv.get_size_or("size", spec.size);
  spec.seed = kv.get_u64_or("seed", spec.seed);
  spec.validate();
  return spec;
}

ToyCorpusSpec ToyCorpusSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read toy spec " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

bool StyleTransform::is_identity() const {
  return half_width == 1.0 && slant == 0.0 && scale == 1.0 && dx == 0.0 && dy == 0.0;
}

Skeleton char_skeleton(std::uint64_t seed, std::size_t char_id) {
  std::mt19937_64 rng = stream(seed, 0x5EE1, char_id);
  const int count = 3 + below(rng, 3);
  Skeleton skeleton;
  while (static_cast<int>(skeleton.size()) < count) {
    const Stroke s = random_stroke(rng);
    const Stroke rev{s.r1, s.c1, s.r0, s.c0};
    if (std::find(skeleton.begin(), skeleton.end(), s) == skeleton.end() &&
        std::find(skeleton.begin(), skeleton.end(), rev) == skeleton.end()) {
      skeleton.push_back(s);
    }
  }
  return skeleton;
}

StyleTransform style_transform(std::uint64_t seed, std::size_t style_id) {
  if (style_id == 0) return StyleTransform::identity();
  std::mt19937_64 rng = stream(seed, 0x571E, style_id);
  StyleTransform t;
  t.half_width = between(rng, 0.6, 2.2);
  t.slant = between(rng, -0.3, 0.3);
  t.scale = between(rng, 0.75, 1.1);
  t.dx = between(rng, -2.5, 2.5);
  t.dy = between(rng, -2.5, 2.5);
  return t;
}

std::string skeleton_wubi(const Skeleton& skeleton) {
  std::size_t horizontal = 0, vertical = 0, diagonal = 0, top = kLattice, left = kLattice;
  for (const Stroke& s : skeleton) {
    if (s.r0 == s.r1) ++horizontal;
    else if (s.c0 == s.c1) ++vertical;
    else ++diagonal;
    top = std::min<std::size_t>(top, std::min(s.r0, s.r1));
    left = std::min<std::size_t>(left, std::min(s.c0, s.c1));
  }
  std::string code;
  code += letter(skeleton.size());
  code += letter(horizontal * 6 + vertical);
  code += letter(diagonal * 5 + top);
  code += letter(left * 5 + static_cast<std::size_t>(skeleton.front().r0));
  return code;
}

GlyphImage render_skeleton(const Skeleton& skeleton, std::size_t size) {
  return render_glyph(skeleton, StyleTransform::identity(), size);
}

GlyphImage render_glyph(const Skeleton& skeleton, const StyleTransform& style, std::size_t size) {
  const double unit_px = static_cast<double>(size) / 32.0;
  const double margin = 4.0 * unit_px;
  const double spacing = (static_cast<double>(size) - 2.0 * margin) / (kLattice - 1);
  const double centre = static_cast<double>(size) / 2.0;
  auto place = [&](int r, int c, double& y, double& x) {
    const double y0 = margin + r * spacing - centre;
    const double x0 = margin + c * spacing - centre;
    y = centre + style.scale * y0 + style.dy * unit_px;
    x = centre + style.scale * (x0 + style.slant * -y0) + style.dx * unit_px;
  };
  std::vector<double> seg;
  for (const Stroke& s : skeleton) {
    double ay, ax, by, bx;
    place(s.r0, s.c0, ay, ax);
    place(s.r1, s.c1, by, bx);
    seg.insert(seg.end(), {ay, ax, by, bx});
  }
  const double radius = style.half_width * unit_px;
  GlyphImage image(size, size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double py = r + 0.5, px = c + 0.5;
      for (std::size_t i = 0; i < seg.size(); i += 4) {
        if (segment_distance(py, px, seg[i], seg[i + 1], seg[i + 2], seg[i + 3]) <= radius) {
          image.set(r, c, true);
          break;
        }
      }
    }
  }
  return image;
}

Corpus gen_toy_corpus(const ToyCorpusSpec& spec) {
  spec.validate();
  CorpusManifest manifest;
  manifest.height = manifest.width = spec.size;
  std::vector<GlyphImage> images;
  std::vector<Skeleton> skeletons;
  for (std::size_t c = 1; c <= spec.chars; ++c) skeletons.push_back(char_skeleton(spec.seed, c));
  for (std::size_t s = 0; s < spec.styles; ++s) {
    const StyleTransform style = style_transform(spec.seed, s);
    for (std::size_t c = 1; c <= spec.chars; ++c) {
      ManifestEntry entry;
      entry.path = "s" + std::to_string(s) + "_c" + std::to_string(c) + ".pbm";
      entry.style_id = s;
      entry.char_id = c;
      entry.wubi = skeleton_wubi(skeletons[c - 1]);
      manifest.entries.push_back(entry);
      images.push_back(render_glyph(skeletons[c - 1], style, spec.size));
    }
  }
  return Corpus(std::move(manifest), std::move(images));
}

std::filesystem::path write_toy_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const CorpusManifest& m = corpus.manifest();
  for (const ManifestEntry& e : m.entries) {
    write_pbm(dir / e.path, corpus.image(e.style_id, e.char_id));
  }
  const std::filesystem::path path = dir / "manifest.tsv";
  write_manifest(m, path);
  return path;
}

}  // namespace glyphstack
