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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glyphstack/optim.hpp"
#include "glyphstack/pipeline.hpp"

namespace glyphstack {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to resume or evaluate a run. The parallel Adam state
// covers codec + parallel parameters, the serial one covers the serial stack.
struct Checkpoint {
  FontModel model;
  AdamState parallel_adam;
  AdamState serial_adam;
  std::uint64_t seed = 0;
  std::size_t references = 4;  // k used by the run
  std::string config_digest;
  std::string split_digest;
  std::vector<std::size_t> pretrain_styles;
  std::vector<std::size_t> finetuned_styles;
};

// Layout: "FTCK", u32 version, u64 metadata length, key=value metadata, then
// little-endian f64 arrays: parameters in all_parameters() order, then the
// first and second moments of each Adam state that has been initialised.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);
// FNV-1a of the serialized form.
std::string checkpoint_digest(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws CheckpointError on version mismatch, truncation, corruption, or a
// chunk geometry other than `expected` when given.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ChunkConfig>& expected = std::nullopt);

std::string chunk_string(const ChunkConfig& cfg);

}  // namespace glyphstack
