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

#include <random>
#include <set>

#include "glyphstack/error.hpp"
#include "glyphstack/pipeline.hpp"
#include "support.hpp"

using namespace glyphstack;
using namespace glyphstack::testing;

TEST_CASE("parallel stage") {
  const ModelConfig cfg = small_model_config(2);
  FontModel model(cfg, 31);
  std::mt19937_64 rng(32);
  const SynthesisTask task = random_task(cfg.chunk, rng);
  const StageOutput a = tp_forward(task, model);
  CHECK(a.patches.rows() == cfg.chunk.tokens());
  CHECK(a.patches.cols() == cfg.chunk.block_pixels());
  CHECK(a.patches.all_finite());
  CHECK(a.image == binarize_patches(a.patches, cfg.chunk));
  const StageOutput b = tp_forward(task, model);
  CHECK(a.patches == b.patches);

  SynthesisTask no_refs = task;
  no_refs.references.clear();
  CHECK_THROWS_AS(tp_forward(no_refs, model), DataError);
  SynthesisTask bad = task;
  bad.references[0].meta.char_id = task.target.char_id;
  CHECK_THROWS_AS(tp_forward(bad, model), DataError);
  bad = task;
  bad.references[0].meta.style_id = 2;
  CHECK_THROWS_AS(tp_forward(bad, model), DataError);
}

TEST_CASE("serial stage teacher forcing") {
  const ModelConfig cfg = small_model_config(2);
  FontModel model(cfg, 33);
  std::mt19937_64 rng(34);
  const std::size_t n = cfg.chunk.tokens();

  SUBCASE("position N+i ignores ground-truth blocks >= i") {
    for (int trial = 0; trial < 10; ++trial) {
      SynthesisTask task = random_task(cfg.chunk, rng);
      const StageOutput stage1 = tp_forward(task, model);
      const Tensor a = ts_train_forward(task, stage1, model);
      CHECK(a.rows() == n);
      CHECK(a.cols() == cfg.chunk.block_pixels());
      const std::size_t i = rng() % n;
      const GlyphImage noise = random_image(cfg.chunk.height, cfg.chunk.width, rng);
      GlyphImage perturbed = *task.ground_truth;
      for (std::size_t b = i; b < n; ++b) {
        const std::size_t r0 = (b / cfg.chunk.blocks_per_row()) * cfg.chunk.block;
        const std::size_t c0 = (b % cfg.chunk.blocks_per_row()) * cfg.chunk.block;
        for (std::size_t r = 0; r < cfg.chunk.block; ++r)
          for (std::size_t c = 0; c < cfg.chunk.block; ++c) perturbed.set(r0 + r, c0 + c, noise.at(r0 + r, c0 + c));
      }
      task.ground_truth = perturbed;
      const Tensor b = ts_train_forward(task, stage1, model);
      for (std::size_t r = 0; r <= i; ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) CHECK(a(r, c) == b(r, c));
    }
  }
  SUBCASE("a blanked history slot equals a blank ground-truth block") {
    for (int trial = 0; trial < 5; ++trial) {
      const SynthesisTask task = random_task(cfg.chunk, rng);
      const GlyphImage stage1 = tp_forward(task, model).image;
      const std::size_t slot = 1 + rng() % (n - 1);
      std::vector<bool> blanked(n, false);
      blanked[slot] = true;
      SynthesisTask cleared = task;
      clear_block(*cleared.ground_truth, cfg.chunk, slot - 1);
      Tape t1(Tape::Mode::kInference), t2(Tape::Mode::kInference), t3(Tape::Mode::kInference);
      const Tensor a = ts_predict(t1, task, stage1, model, blanked).value();
      const Tensor b = ts_predict(t2, cleared, stage1, model).value();
      CHECK(max_abs_diff(a, b) == 0.0);
      const Tensor none = ts_predict(t3, task, stage1, model, std::vector<bool>(n, false)).value();
      CHECK(max_abs_diff(none, ts_predict(t3, task, stage1, model).value()) == 0.0);
    }
    const SynthesisTask task = random_task(cfg.chunk, rng);
    Tape tape(Tape::Mode::kInference);
    CHECK_THROWS_AS(ts_predict(tape, task, tp_forward(task, model).image, model, std::vector<bool>(n + 1, false)),
                    ShapeError);
  }
  SUBCASE("missing ground truth is rejected") {
    SynthesisTask task = random_task(cfg.chunk, rng);
    const StageOutput stage1 = tp_forward(task, model);
    task.ground_truth.reset();
    CHECK_THROWS_AS(ts_train_forward(task, stage1, model), DataError);
  }
  SUBCASE("gradient reaches codebook rows used by ground-truth input blocks") {
    SynthesisTask task = random_task(cfg.chunk, rng);
    // Source and stage 1 blank, so only ground-truth blocks index the codebook.
    task.source = GlyphImage(cfg.chunk.height, cfg.chunk.width);
    const GlyphImage stage1(cfg.chunk.height, cfg.chunk.width);
    const ChunkedGlyph gt = chunk_image(*task.ground_truth, cfg.chunk);
    std::set<std::uint32_t> used;
    for (std::size_t b = 0; b + 1 < n; ++b)
      for (std::uint32_t idx : gt.block(b)) used.insert(idx);
    std::set<std::uint32_t> last_only;
    for (std::uint32_t idx : gt.block(n - 1))
      if (!used.count(idx)) last_only.insert(idx);

    Parameter& table = model.codebook.table();
    zero_grads(model.all_parameters());
    {
      Tape tape;
      tape.backward(loss_mse(ts_predict(tape, task, stage1, model), *task.ground_truth, cfg.chunk));
    }
    auto row_norm = [&](std::uint32_t idx) {
      double s = 0;
      for (std::size_t c = 0; c < table.grad.cols(); ++c) s += table.grad(idx, c) * table.grad(idx, c);
      return s;
    };
    for (std::uint32_t idx : used) {
      if (idx != 0) CHECK(row_norm(idx) > 0.0);
    }
    for (std::uint32_t idx : last_only) CHECK(row_norm(idx) == 0.0);  // block N-1 is never an input
  }
}

TEST_CASE("serial inference") {
  const ModelConfig cfg = small_model_config(1);
  FontModel model(cfg, 35);
  std::mt19937_64 rng(36);
  const SynthesisTask task = random_task(cfg.chunk, rng);

  SUBCASE("exactly N steps") {
    std::size_t steps = 0;
    const StageOutput out = ts_infer(task, tp_forward(task, model), model, &steps);
    CHECK(steps == cfg.chunk.tokens());
    CHECK(out.image.height() == cfg.chunk.height);
    CHECK(out.image == binarize_patches(out.patches, cfg.chunk));
  }
  SUBCASE("constant refinement reproduces a constant stage 1 output") {
    // Zero generator weights: T_s emits tanh(bias) everywhere.
    for (const bool ink : {false, true}) {
      model.serial.generator_w.value.fill(0.0);
      model.serial.generator_b.value.fill(ink ? 3.0 : -3.0);
      StageOutput stage1;
      stage1.patches = Tensor::matrix(cfg.chunk.tokens(), cfg.chunk.block_pixels(), ink ? 0.9 : -0.9);
      stage1.image = binarize_patches(stage1.patches, cfg.chunk);
      CHECK(ts_infer(task, stage1, model).image == stage1.image);
    }
  }
  SUBCASE("synthesize has the configured geometry") {
    const GlyphImage out = synthesize(task, model);
    CHECK(out.height() == cfg.chunk.height);
    CHECK(out.width() == cfg.chunk.width);
    const SynthesisResult both = synthesize_stages(task, model);
    CHECK(both.serial.image == out);
  }
}

TEST_CASE("mse loss over the latter half") {
  const ChunkConfig cfg = small_model_config().chunk;
  const std::size_t n = cfg.tokens(), px = cfg.block_pixels();
  std::mt19937_64 rng(37);
  const GlyphImage target = random_image(cfg.height, cfg.width, rng);
  GlyphImage ones(cfg.height, cfg.width);
  for (std::size_t r = 0; r < cfg.height; ++r)
    for (std::size_t c = 0; c < cfg.width; ++c) ones.set(r, c, true);

  Tensor exact = Tensor::matrix(2 * n, px);
  const Tensor mapped = block_targets(target, cfg);
  for (std::size_t i = 0; i < mapped.size(); ++i) exact[n * px + i] = mapped[i];
  CHECK(loss_mse(exact, target, cfg) == 0.0);
  CHECK(loss_mse(Tensor::matrix(2 * n, px, 0.0), ones, cfg) == 1.0);
  CHECK(loss_mse(Tensor::matrix(2 * n, px, -1.0), ones, cfg) == 4.0);

  Tensor noisy = random_tensor(2 * n, px, rng);
  const double before = loss_mse(noisy, target, cfg);
  for (std::size_t i = 0; i < n * px; ++i) noisy[i] = 0.0;
  CHECK(loss_mse(noisy, target, cfg) == before);
  CHECK_THROWS_AS(loss_mse(Tensor::matrix(n, px), target, cfg), ShapeError);
}
