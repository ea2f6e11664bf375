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

#include "glyphstack/image.hpp"

#include <algorithm>
#include <string>

#include "glyphstack/error.hpp"

namespace glyphstack {

GlyphImage::GlyphImage(std::size_t height, std::size_t width)
    : height_(height), width_(width), pixels_(height * width, 0) {}

GlyphImage GlyphImage::from_pixels(std::size_t height, std::size_t width,
                                   std::vector<std::uint8_t> pixels) {
  if (pixels.size() != height * width) {
    throw DataError("image: " + std::to_string(pixels.size()) + " pixels for " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  if (std::any_of(pixels.begin(), pixels.end(), [](std::uint8_t p) { return p > 1; })) {
    throw DataError("image: non-binary pixel value");
  }
  GlyphImage image;
  image.height_ = height;
  image.width_ = width;
  image.pixels_ = std::move(pixels);
  return image;
}

std::size_t GlyphImage::ink_count() const {
  return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), 1));
}

}  // namespace glyphstack
