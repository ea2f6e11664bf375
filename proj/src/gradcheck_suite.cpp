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

#include "glyphstack/gradcheck_suite.hpp"

#include <random>

#include "glyphstack/pipeline.hpp"
#include "glyphstack/transformer.hpp"

namespace glyphstack {

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

Parameter random_param(const std::string& name, std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                       double scale = 1.0) {
  return Parameter(name, random_matrix(rows, cols, rng, scale));
}

GlyphImage random_glyph(const ChunkConfig& cfg, std::mt19937_64& rng, double density) {
  std::bernoulli_distribution ink(density);
  GlyphImage g(cfg.height, cfg.width);
  for (std::size_t r = 0; r < cfg.height; ++r)
    for (std::size_t c = 0; c < cfg.width; ++c) g.set(r, c, ink(rng));
  return g;
}

// Tiny model: 8x8 glyphs, 4x4 blocks of 2x2 patches, d_token 16.
ModelConfig mini_config() {
  ModelConfig cfg;
  cfg.chunk = {8, 8, 4, 2, 2};
  cfg.dims = {2, 2, 1};
  cfg.style_rows = 2;
  cfg.chars = 4;
  StackConfig s;
  s.d_model = cfg.d_token();
  s.encoder_layers = s.decoder_layers = 2;
  s.heads = 2;
  s.ff_width = 24;
  cfg.parallel = cfg.serial = s;
  return cfg;
}

SynthesisTask mini_task(const ChunkConfig& cfg, std::mt19937_64& rng) {
  SynthesisTask task;
  task.target = {1, 1, {0, 1, 2, 3}};
  task.source = random_glyph(cfg, rng, 0.4);
  for (std::size_t c = 2; c <= 3; ++c) {
    task.references.push_back({random_glyph(cfg, rng, 0.4), {1, c, {static_cast<std::uint8_t>(c), 4, 5, 6}}});
  }
  task.ground_truth = random_glyph(cfg, rng, 0.4);
  // A blank block exercises the masked paths.
  for (std::size_t r = 0; r < cfg.block; ++r)
    for (std::size_t c = 0; c < cfg.block; ++c) task.references[0].image.set(r, c, false);
  return task;
}

ParameterList list_of(std::vector<Parameter>& params) {
  ParameterList out;
  for (Parameter& p : params) out.push_back(&p);
  return out;
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(double tolerance, double step, double floor,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckCase> cases;
  auto record = [&](const std::string& name, const GradCheckResult& r) {
    cases.push_back({name, r, r.max_rel_error < tolerance});
  };

  {
    std::vector<Parameter> p;
    p.push_back(random_param("a", 3, 4, rng));
    p.push_back(random_param("b", 4, 5, rng));
    p.push_back(random_param("c", 2, 4, rng));
    const Tensor w = random_matrix(3, 5, rng);
    const Tensor w2 = random_matrix(3, 2, rng);
    record("matmul", finite_diff_check(
                         [&](Tape& t) {
                           Var a = t.leaf(p[0]);
                           return add(weighted_sum(matmul(a, t.leaf(p[1])), w),
                                      weighted_sum(matmul_nt(a, t.leaf(p[2])), w2));
                         },
                         list_of(p), step, floor));
  }
  {
    std::vector<Parameter> p;
    p.push_back(random_param("x", 4, 6, rng));
    p.push_back(random_param("gain", 1, 6, rng));
    p.push_back(random_param("bias", 1, 6, rng));
    const Tensor w = random_matrix(4, 6, rng);
    record("layer_norm", finite_diff_check(
                             [&](Tape& t) {
                               return weighted_sum(layer_norm(t.leaf(p[0]), t.leaf(p[1]), t.leaf(p[2])), w);
                             },
                             list_of(p), step, floor));
  }
  {
    FeedForwardParams ff{random_param("w1", 6, 10, rng, 0.5), random_param("b1", 1, 10, rng, 0.5),
                         random_param("w2", 10, 6, rng, 0.5), random_param("b2", 1, 6, rng, 0.5)};
    Parameter x = random_param("x", 5, 6, rng);
    const Tensor w = random_matrix(5, 6, rng);
    record("feed_forward",
           finite_diff_check([&](Tape& t) { return weighted_sum(feed_forward(t.leaf(x), ff), w); },
                             {&x, &ff.w1, &ff.b1, &ff.w2, &ff.b2}, step, floor));
  }
  {
    const std::size_t d = 8, q = 5, k = 6;
    AttentionParams ap;
    Parameter* slots[8] = {&ap.wq, &ap.bq, &ap.wk, &ap.bk, &ap.wv, &ap.bv, &ap.wo, &ap.bo};
    const char* names[8] = {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"};
    for (int i = 0; i < 8; ++i) *slots[i] = random_param(names[i], i % 2 ? 1 : d, d, rng, 0.4);
    Parameter queries = random_param("queries", q, d, rng);
    Parameter keys = random_param("keys", k, d, rng);
    AttentionMask mask(q, k, true);
    mask.set(0, 1, false);
    mask.set(2, 4, false);
    for (std::size_t r = 0; r < q; ++r) mask.set(r, 5, false);  // a key nobody sees
    for (std::size_t c = 0; c < k; ++c) mask.set(4, c, false);  // a query that sees nothing
    const Tensor w = random_matrix(q, d, rng);
    ParameterList params(slots, slots + 8);
    params.push_back(&queries);
    params.push_back(&keys);
    record("masked_attention", finite_diff_check(
                                   [&](Tape& t) {
                                     Var kv = t.leaf(keys);
                                     return weighted_sum(multi_head_attention(t.leaf(queries), kv, kv, mask, ap, 2), w);
                                   },
                                   params, step, floor));
  }
  {
    const ModelConfig cfg = mini_config();
    FontModel model(cfg, seed);
    const SynthesisTask task = mini_task(cfg.chunk, rng);
    ParameterList params = model.codec_parameters();
    for (Parameter* p : model.parallel_parameters()) params.push_back(p);
    record("mini_stack_parallel", finite_diff_check(
                                      [&](Tape& t) { return loss_mse(tp_predict(t, task, model), *task.ground_truth, cfg.chunk); },
                                      params, step, floor));
    const GlyphImage stage1 = random_glyph(cfg.chunk, rng, 0.4);
    params = model.codec_parameters();
    for (Parameter* p : model.serial_parameters()) params.push_back(p);
    record("mini_stack_serial", finite_diff_check(
                                    [&](Tape& t) {
                                      return loss_mse(ts_predict(t, task, stage1, model), *task.ground_truth, cfg.chunk);
                                    },
                                    params, step, floor));
  }
  return cases;
}

}  // namespace glyphstack
