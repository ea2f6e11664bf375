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
#include <string_view>
#include <vector>

#include "glyphstack/image.hpp"

namespace glyphstack {

// Decoded netpbm raster. For bitmaps (P1/P4) samples are 1 = black;
// for graymaps (P2/P5) they are raw gray levels in [0, maxval].
struct PnmRaster {
  char kind = '1';  // '1', '2', '4', '5'
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 1;
  std::vector<std::uint16_t> samples;
};

PnmRaster parse_pnm(std::string_view bytes);
PnmRaster read_pnm(const std::filesystem::path& path);

// Gray levels map to ink when level * 255 >= 128 * maxval (level >= 128 for
// 8-bit files).
GlyphImage raster_to_glyph(const PnmRaster& raster);

// Reads a P1/P4 bitmap or P2/P5 graymap and checks it is height x width.
GlyphImage load_glyph(const std::filesystem::path& path, std::size_t height, std::size_t width);

std::string encode_pbm(const GlyphImage& image, bool binary = true);
void write_pbm(const std::filesystem::path& path, const GlyphImage& image, bool binary = true);

}  // namespace glyphstack
