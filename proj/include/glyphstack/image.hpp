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
#include <span>
#include <vector>

namespace glyphstack {

// Binary bitmap, 1 = ink, 0 = background, row-major.
class GlyphImage {
 public:
  GlyphImage() = default;
  GlyphImage(std::size_t height, std::size_t width);
  // Throws DataError unless every pixel is 0 or 1.
  static GlyphImage from_pixels(std::size_t height, std::size_t width,
                                std::vector<std::uint8_t> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, bool ink) {
    pixels_[row * width_ + col] = ink ? 1 : 0;
  }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::size_t ink_count() const;

  bool operator==(const GlyphImage&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace glyphstack
