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

#include <cmath>
#include <random>
#include <set>

#include "glyphstack/autodiff.hpp"
#include "glyphstack/transformer.hpp"
#include "support.hpp"

using namespace glyphstack;
using glyphstack::testing::random_tensor;

namespace {

StackConfig small_stack(std::size_t d = 16, std::size_t layers = 2) {
  StackConfig s;
  s.d_model = d;
  s.encoder_layers = s.decoder_layers = layers;
  s.heads = 4;
  return s;
}

Tensor rows_of(const Tensor& t, std::size_t begin, std::size_t count) {
  Tensor out = Tensor::matrix(count, t.cols());
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out(r, c) = t(begin + r, c);
  return out;
}

Tensor run_attention(const Tensor& q, const Tensor& kv, const AttentionMask& mask, AttentionParams& p) {
  Tape tape(Tape::Mode::kInference);
  Var keys = tape.constant(kv);
  return multi_head_attention(tape.constant(q), keys, keys, mask, p, 4).value();
}

}  // namespace

TEST_CASE("positional encoding") {
  const Tensor pe = positional_encoding(200, 16);
  for (std::size_t c = 0; c < 16; ++c) CHECK(pe(0, c) == (c % 2 == 0 ? 0.0 : 1.0));
  for (double v : pe.values()) CHECK(std::abs(v) <= 1.0);
  CHECK(std::abs(pe(3, 4) - std::sin(3.0 / std::pow(10000.0, 4.0 / 16.0))) < 1e-15);
  CHECK(std::abs(pe(3, 5) - std::cos(3.0 / std::pow(10000.0, 4.0 / 16.0))) < 1e-15);

  // Distinct positions give distinct rows.
  const std::size_t n = 10000;
  const Tensor big = positional_encoding(n, 16);
  std::set<std::vector<double>> seen;
  for (std::size_t r = 0; r < n; ++r) {
    seen.insert(std::vector<double>(big.data() + r * 16, big.data() + (r + 1) * 16));
  }
  CHECK(seen.size() == n);

  const std::vector<std::size_t> pos = glyph_positions(3, 4);
  CHECK(pos == std::vector<std::size_t>{0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3});
}

TEST_CASE("mask construction") {
  // Blank tokens at 1-based positions 2 and 4.
  CHECK(visible_keys({false, true, false, true}) == std::vector<bool>{true, false, true, false});
  const AttentionMask enc = encoder_mask({false, true, false, true});
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(enc.visible(q, 0));
    CHECK_FALSE(enc.visible(q, 1));
  }
  const std::vector<bool> source_blank = {false, true, false};
  const AttentionMask par = parallel_self_mask(source_blank);
  CHECK(par.rows() == 6);
  for (std::size_t q = 0; q < 6; ++q) {
    for (std::size_t k = 3; k < 6; ++k) CHECK_FALSE(par.visible(q, k));
    CHECK(par.visible(q, 0));
    CHECK_FALSE(par.visible(q, 1));
  }
  const AttentionMask ser = serial_self_mask(source_blank, {false, false, true});
  for (std::size_t q = 0; q < 3; ++q)
    for (std::size_t k = 3; k < 6; ++k) CHECK_FALSE(ser.visible(q, k));
  CHECK(ser.visible(3, 3));
  CHECK_FALSE(ser.visible(3, 4));
  CHECK(ser.visible(4, 4));
  CHECK_FALSE(ser.visible(5, 5));  // blank history token
  CHECK(ser.visible(5, 2));
}

TEST_CASE("multi-head attention") {
  std::mt19937_64 rng(21);
  AttentionParams p = make_attention_params(16, "att", rng);
  for (Parameter* b : {&p.bq, &p.bk, &p.bv, &p.bo}) b->value = random_tensor(1, 16, rng, 0.1);

  SUBCASE("one visible position returns the projected value") {
    const Tensor q = random_tensor(1, 16, rng), v = random_tensor(1, 16, rng);
    const Tensor out = run_attention(q, v, AttentionMask(1, 1, true), p);
    Tape tape(Tape::Mode::kInference);
    const Tensor expect = affine(affine(tape.constant(v), p.wv, p.bv), p.wo, p.bo).value();
    CHECK(max_abs_diff(out, expect) < 1e-13);
  }
  SUBCASE("permuting hidden keys changes nothing") {
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor q = random_tensor(4, 16, rng);
      Tensor kv = random_tensor(6, 16, rng);
      const std::vector<bool> visible = {true, false, true, false, false, true};
      const AttentionMask mask = AttentionMask::from_keys(4, visible);
      const Tensor base = run_attention(q, kv, mask, p);
      // Rotate the hidden rows 1 -> 3 -> 4 -> 1.
      Tensor perm = kv;
      for (std::size_t c = 0; c < 16; ++c) {
        perm(3, c) = kv(1, c);
        perm(4, c) = kv(3, c);
        perm(1, c) = kv(4, c);
      }
      CHECK(max_abs_diff(run_attention(q, perm, mask, p), base) == 0.0);
    }
  }
  SUBCASE("hiding a key more widely leaves queries that already ignored it alone") {
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor q = random_tensor(5, 16, rng), kv = random_tensor(5, 16, rng);
      AttentionMask mask(5, 5, true);
      const std::size_t key = rng() % 5;
      mask.set(0, key, false);
      mask.set(2, key, false);
      const Tensor base = run_attention(q, kv, mask, p);
      for (std::size_t r = 0; r < 5; ++r) mask.set(r, key, false);
      const Tensor wider = run_attention(q, kv, mask, p);
      CHECK(max_abs_diff(rows_of(wider, 0, 1), rows_of(base, 0, 1)) == 0.0);
      CHECK(max_abs_diff(rows_of(wider, 2, 1), rows_of(base, 2, 1)) == 0.0);
    }
  }
}

TEST_CASE("encoder") {
  std::mt19937_64 rng(22);
  StackParams params(small_stack(), 4, "enc", rng);
  const std::vector<std::size_t> positions = glyph_positions(1, 6);

  SUBCASE("all-blank input stays finite") {
    Tape tape(Tape::Mode::kInference);
    const std::vector<bool> blank(6, true);
    const Tensor out = encode(tape.constant(Tensor::matrix(6, 16)), positions, encoder_mask(blank), params).value();
    CHECK(out.all_finite());
    CHECK(out.rows() == 6);
    CHECK(out.cols() == 16);
  }
  SUBCASE("blank token content is invisible to the other positions") {
    for (int trial = 0; trial < 20; ++trial) {
      Tensor x = random_tensor(6, 16, rng);
      const std::vector<bool> blank = {false, true, false, false, true, false};
      Tape t1(Tape::Mode::kInference), t2(Tape::Mode::kInference);
      const Tensor a = encode(t1.constant(x), positions, encoder_mask(blank), params).value();
      for (std::size_t c = 0; c < 16; ++c) {
        x(1, c) = 10.0 * std::sin(trial + c);
        x(4, c) = -3.0 + c;
      }
      const Tensor b = encode(t2.constant(x), positions, encoder_mask(blank), params).value();
      for (std::size_t r : {0, 2, 3, 5}) CHECK(max_abs_diff(rows_of(a, r, 1), rows_of(b, r, 1)) == 0.0);
    }
  }
}

TEST_CASE("decoder") {
  std::mt19937_64 rng(23);
  StackParams params(small_stack(), 4, "dec", rng);
  const std::size_t n = 4;
  const std::vector<std::size_t> positions = glyph_positions(2, n);
  const Tensor memory = random_tensor(5, 16, rng);
  const std::vector<bool> memory_blank = {false, false, true, false, false};

  SUBCASE("serial mask: prefix outputs ignore later target positions") {
    for (int trial = 0; trial < 20; ++trial) {
      Tensor x = random_tensor(2 * n, 16, rng);
      const std::vector<bool> source_blank(n, false), target_blank(n, false);
      const AttentionMask self = serial_self_mask(source_blank, target_blank);
      const AttentionMask cross = cross_mask(2 * n, memory_blank);
      const Tensor a = decoder_forward(x, positions, memory, self, cross, params);
      const std::size_t cut = n + rng() % n;
      for (std::size_t r = cut + 1; r < 2 * n; ++r)
        for (std::size_t c = 0; c < 16; ++c) x(r, c) += 5.0;
      const Tensor b = decoder_forward(x, positions, memory, self, cross, params);
      CHECK(max_abs_diff(rows_of(a, 0, cut + 1), rows_of(b, 0, cut + 1)) == 0.0);
      CHECK(a.rows() == 2 * n);
    }
  }
  SUBCASE("blank memory rows are unseen") {
    const Tensor x = random_tensor(2 * n, 16, rng);
    const AttentionMask self = parallel_self_mask(std::vector<bool>(n, false));
    const AttentionMask cross = cross_mask(2 * n, memory_blank);
    const Tensor a = decoder_forward(x, positions, memory, self, cross, params);
    Tensor changed = memory;
    for (std::size_t c = 0; c < 16; ++c) changed(2, c) = 100.0;
    CHECK(max_abs_diff(decoder_forward(x, positions, changed, self, cross, params), a) == 0.0);
  }
}

TEST_CASE("generator") {
  std::mt19937_64 rng(24);
  StackParams params(small_stack(), 64, "gen", rng);
  CHECK(generate_patches(Tensor::matrix(16, 16), params) == Tensor::matrix(16, 64));
  const Tensor out = generate_patches(random_tensor(16, 16, rng), params);
  CHECK(out.rows() == 16);
  CHECK(out.cols() == 64);
  for (double v : out.values()) CHECK((v > -1.0 && v < 1.0));
}
