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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "glyphstack/dataset.hpp"
#include "glyphstack/error.hpp"
#include "glyphstack/pnm.hpp"
#include "glyphstack/toy_corpus.hpp"
#include "support.hpp"

using namespace glyphstack;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("glyphstack_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

SplitSpec split_for_toy() {
  SplitSpec s;
  s.pretrain_styles = {0, 1};
  s.finetune_styles = {2};
  s.finetune_chars = {1, 2, 3};
  s.test_chars = {4, 5, 6};
  return s;
}

}  // namespace

TEST_CASE("portable bitmap loading") {
  const fs::path dir = scratch_dir("pnm");
  SUBCASE("all-white P1") {
    write_file(dir / "white.pbm", "P1\n# comment\n3 2\n0 0 0\n0 0 0\n");
    CHECK(load_glyph(dir / "white.pbm", 2, 3).ink_count() == 0);
  }
  SUBCASE("P1 and P4 agree") {
    std::mt19937_64 rng(41);
    const GlyphImage g = glyphstack::testing::random_image(13, 11, rng);
    write_pbm(dir / "a.pbm", g, false);
    write_pbm(dir / "b.pbm", g, true);
    CHECK(load_glyph(dir / "a.pbm", 13, 11) == g);
    CHECK(load_glyph(dir / "b.pbm", 13, 11) == g);
    CHECK(encode_pbm(g, true).substr(0, 2) == "P4");
  }
  SUBCASE("graymap threshold at 128") {
    write_file(dir / "g.pgm", "P2\n2 1\n255\n127 128\n");
    const GlyphImage g = load_glyph(dir / "g.pgm", 1, 2);
    CHECK(g.at(0, 0) == 0);
    CHECK(g.at(0, 1) == 1);
    std::string p5 = "P5\n2 1\n255\n";
    p5 += static_cast<char>(127);
    p5 += static_cast<char>(128);
    write_file(dir / "g5.pgm", p5);
    CHECK(load_glyph(dir / "g5.pgm", 1, 2) == g);
  }
  SUBCASE("geometry mismatch and unknown magic are rejected") {
    write_file(dir / "w.pbm", "P1\n2 2\n0 1 1 0\n");
    CHECK_THROWS_AS(load_glyph(dir / "w.pbm", 3, 2), DataError);
    write_file(dir / "x.ppm", "P6\n1 1\n255\nabc");
    CHECK_THROWS_AS(load_glyph(dir / "x.ppm", 1, 1), DataError);
    write_file(dir / "t.pbm", "P4\n16 2\n\x01");
    CHECK_THROWS_AS(load_glyph(dir / "t.pbm", 2, 16), DataError);
  }
}

TEST_CASE("manifest validation") {
  const fs::path dir = scratch_dir("manifest");
  for (const char* name : {"a.pbm", "b.pbm", "c.pbm"}) write_file(dir / name, "P1\n2 2\n0 1 1 0\n");
  const std::string header = "path\tstyle_id\tchar_id\twubi\n";

  SUBCASE("empty file") {
    write_file(dir / "m.tsv", "");
    CHECK(error_of([&] { load_manifest(dir / "m.tsv"); }).find("empty manifest") != std::string::npos);
    write_file(dir / "m.tsv", header);
    CHECK(error_of([&] { load_manifest(dir / "m.tsv"); }).find("empty manifest") != std::string::npos);
  }
  SUBCASE("three valid rows") {
    write_file(dir / "m.tsv", header + "a.pbm\t0\t1\tabcd\nb.pbm\t1\t1\tabcd\nc.pbm\t1\t2\txyzz\n");
    const CorpusManifest m = load_manifest(dir / "m.tsv");
    CHECK(m.entries.size() == 3);
    CHECK(m.height == 2);
    CHECK(m.entries[2].line == 4);
  }
  SUBCASE("duplicate names both rows") {
    write_file(dir / "m.tsv", header + "a.pbm\t0\t1\tabcd\nb.pbm\t1\t1\tabcd\nc.pbm\t0\t1\tabcd\n");
    const std::string msg = error_of([&] { load_manifest(dir / "m.tsv"); });
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  SUBCASE("malformed wubi and missing files carry line numbers") {
    write_file(dir / "m.tsv", header + "a.pbm\t0\t1\tABCD\nmissing.pbm\t0\t2\tabcd\n");
    const std::string msg = error_of([&] { load_manifest(dir / "m.tsv"); });
    CHECK(msg.find("line 2: malformed wubi") != std::string::npos);
    CHECK(msg.find("line 3: missing file") != std::string::npos);
  }
}

TEST_CASE("split and task factory") {
  const Corpus corpus = gen_toy_corpus(ToyCorpusSpec::parse("styles=3, chars=6, size=32, seed=2"));
  const SplitSpec split = split_for_toy();
  std::mt19937_64 rng(42);

  SUBCASE("split rules") {
    SplitSpec overlap = split;
    overlap.test_chars.push_back(2);
    CHECK_THROWS_AS(overlap.validate(), DataError);
    SplitSpec seen = split;
    seen.pretrain_styles.push_back(2);
    CHECK_THROWS_AS(seen.validate(), DataError);
    CHECK(SplitSpec::parse(split.to_text()).digest() == split.digest());
    CHECK(SplitSpec::parse("pretrain_styles=0-1\nfinetune_styles=2\nfinetune_chars=1,2,3\ntest_chars=4-6").test_chars ==
          std::vector<std::size_t>{4, 5, 6});
  }
  SUBCASE("k=1 with one eligible reference") {
    SplitSpec two = split;
    two.finetune_chars = {1, 2};
    for (int i = 0; i < 5; ++i) {
      const SynthesisTask t = make_task(corpus, two, TaskPhase::kFinetune, 2, 1, 1, rng);
      REQUIRE(t.references.size() == 1);
      CHECK(t.references[0].meta.char_id == 2);
    }
    CHECK_THROWS_AS(make_task(corpus, two, TaskPhase::kFinetune, 2, 1, 2, rng), DataError);
  }
  SUBCASE("references exclude the target and respect the few-shot set") {
    for (int i = 0; i < 50; ++i) {
      const std::size_t ch = 1 + rng() % 3;
      const SynthesisTask t = make_task(corpus, split, TaskPhase::kFinetune, 2, ch, 2, rng);
      std::set<std::size_t> ids;
      for (const auto& r : t.references) {
        CHECK(r.meta.char_id != ch);
        CHECK(r.meta.style_id == 2);
        CHECK(std::count(split.finetune_chars.begin(), split.finetune_chars.end(), r.meta.char_id) == 1);
        ids.insert(r.meta.char_id);
      }
      CHECK(ids.size() == 2);
      CHECK(t.source == corpus.image(0, ch));
      CHECK(*t.ground_truth == corpus.image(2, ch));
    }
    for (int i = 0; i < 20; ++i) {
      const SynthesisTask t = make_task(corpus, split, TaskPhase::kEvaluate, 2, 4 + rng() % 3, 2, rng);
      for (const auto& r : t.references) CHECK(r.meta.char_id <= 3);
    }
  }
  SUBCASE("no training task targets a held-out glyph") {
    CHECK_THROWS_AS(make_task(corpus, split, TaskPhase::kFinetune, 2, 4, 1, rng), DataError);
    CHECK_THROWS_AS(make_task(corpus, split, TaskPhase::kPretrain, 2, 4, 1, rng), DataError);
    CHECK_THROWS_AS(make_task(corpus, split, TaskPhase::kPretrain, 2, 1, 1, rng), DataError);
    for (TaskPhase phase : {TaskPhase::kPretrain, TaskPhase::kFinetune}) {
      for (const auto& [style, ch] : phase_targets(corpus, split, phase)) {
        const bool leak = style == 2 && ch >= 4;
        CHECK_FALSE(leak);
      }
    }
    CHECK(phase_targets(corpus, split, TaskPhase::kEvaluate).size() == 3);
    CHECK(phase_targets(corpus, split, TaskPhase::kPretrain).size() == 6);
  }
}

TEST_CASE("toy corpus generator") {
  const ToyCorpusSpec spec = ToyCorpusSpec::parse("styles=4, chars=12, size=32, seed=5");
  CHECK(spec.styles == 4);
  CHECK(spec.chars == 12);
  CHECK_THROWS_AS(ToyCorpusSpec::parse("styles=4, colour=2"), UsageError);

  const Corpus a = gen_toy_corpus(spec), b = gen_toy_corpus(spec);
  REQUIRE(a.size() == 48);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t c = 1; c <= 12; ++c) CHECK(a.image(s, c) == b.image(s, c));

  for (std::size_t c = 1; c <= 12; ++c) {
    const Skeleton sk = char_skeleton(spec.seed, c);
    CHECK(render_glyph(sk, StyleTransform::identity(), 32) == render_skeleton(sk, 32));
    CHECK(a.image(0, c) == render_skeleton(sk, 32));
    CHECK(a.image(0, c).ink_count() > 0);
    for (std::size_t s = 1; s < 4; ++s) {
      CHECK_FALSE(style_transform(spec.seed, s).is_identity());
      for (std::size_t t = 0; t < s; ++t) CHECK_FALSE(a.image(s, c) == a.image(t, c));
    }
    const std::string code = a.manifest().entries[c - 1].wubi;
    CHECK_NOTHROW(GlyphMeta::parse_wubi(code));
    CHECK(code == skeleton_wubi(sk));
  }

  const fs::path dir = scratch_dir("toy");
  const fs::path manifest = write_toy_corpus(a, dir);
  const Corpus loaded = load_corpus(load_manifest(manifest));
  CHECK(loaded.size() == a.size());
  for (std::size_t c = 1; c <= 12; ++c) CHECK(loaded.image(3, c) == a.image(3, c));
}
