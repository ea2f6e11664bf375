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

#include "glyphstack/pnm.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const unsigned char c = static_cast<unsigned char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint32_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DataError(std::string("pnm: expected ") + what);
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (value > 0xFFFFFFFFULL) throw DataError(std::string("pnm: ") + what + " too large");
      ++pos_;
    }
    return static_cast<std::uint32_t>(value);
  }

  // Plain P1 rasters allow digits without separators.
  std::uint16_t bit() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw DataError("pnm: truncated bitmap data");
    const char c = bytes_[pos_++];
    if (c != '0' && c != '1') throw DataError("pnm: bitmap sample is not 0 or 1");
    return c == '1' ? 1 : 0;
  }

  // Binary rasters start after exactly one whitespace byte.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw DataError("pnm: missing whitespace after header");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

PnmRaster parse_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw DataError("pnm: missing magic number");
  PnmRaster raster;
  raster.kind = bytes[1];
  if (raster.kind != '1' && raster.kind != '2' && raster.kind != '4' && raster.kind != '5') {
    throw DataError(std::string("pnm: unsupported magic P") + raster.kind);
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  raster.width = reader.number("width");
  raster.height = reader.number("height");
  if (raster.width == 0 || raster.height == 0) throw DataError("pnm: empty raster");
  const bool bitmap = raster.kind == '1' || raster.kind == '4';
  raster.maxval = bitmap ? 1 : reader.number("maxval");
  if (raster.maxval == 0 || raster.maxval > 65535) throw DataError("pnm: maxval out of range");

  const std::size_t count = raster.width * raster.height;
  raster.samples.resize(count);
  switch (raster.kind) {
    case '1':
      for (auto& s : raster.samples) s = reader.bit();
      break;
    case '2':
      for (auto& s : raster.samples) {
        const std::uint32_t v = reader.number("gray sample");
        if (v > raster.maxval) throw DataError("pnm: gray sample exceeds maxval");
        s = static_cast<std::uint16_t>(v);
      }
      break;
    case '4': {
      reader.end_header();
      const std::size_t stride = (raster.width + 7) / 8;
      if (bytes.size() - reader.pos() < stride * raster.height) {
        throw DataError("pnm: truncated bitmap data");
      }
      const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
      for (std::size_t r = 0; r < raster.height; ++r)
        for (std::size_t c = 0; c < raster.width; ++c)
          raster.samples[r * raster.width + c] = (data[r * stride + c / 8] >> (7 - c % 8)) & 1U;
      break;
    }
    case '5': {
      reader.end_header();
      const std::size_t width = raster.maxval < 256 ? 1 : 2;
      if (bytes.size() - reader.pos() < count * width) throw DataError("pnm: truncated graymap data");
      const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
      for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t v = width == 1 ? data[i] : (data[2 * i] << 8U) | data[2 * i + 1];
        if (v > raster.maxval) throw DataError("pnm: gray sample exceeds maxval");
        raster.samples[i] = static_cast<std::uint16_t>(v);
      }
      break;
    }
  }
  return raster;
}

PnmRaster read_pnm(const std::filesystem::path& path) {
  try {
    return parse_pnm(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

GlyphImage raster_to_glyph(const PnmRaster& raster) {
  std::vector<std::uint8_t> pixels(raster.samples.size());
  const bool bitmap = raster.kind == '1' || raster.kind == '4';
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (bitmap) {
      pixels[i] = static_cast<std::uint8_t>(raster.samples[i]);
    } else {
      pixels[i] = std::uint64_t{raster.samples[i]} * 255 >= std::uint64_t{128} * raster.maxval ? 1 : 0;
    }
  }
  return GlyphImage::from_pixels(raster.height, raster.width, std::move(pixels));
}

GlyphImage load_glyph(const std::filesystem::path& path, std::size_t height, std::size_t width) {
  const PnmRaster raster = read_pnm(path);
  if (raster.height != height || raster.width != width) {
    throw DataError(path.string() + ": image is " + std::to_string(raster.height) + "x" +
                    std::to_string(raster.width) + ", expected " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  return raster_to_glyph(raster);
}

std::string encode_pbm(const GlyphImage& image, bool binary) {
  std::string out = std::string(binary ? "P4" : "P1") + "\n" + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n";
  if (binary) {
    const std::size_t stride = (image.width() + 7) / 8;
    std::string data(stride * image.height(), '\0');
    for (std::size_t r = 0; r < image.height(); ++r)
      for (std::size_t c = 0; c < image.width(); ++c)
        if (image.at(r, c)) data[r * stride + c / 8] |= static_cast<char>(0x80U >> (c % 8));
    out += data;
  } else {
    for (std::size_t r = 0; r < image.height(); ++r) {
      for (std::size_t c = 0; c < image.width(); ++c) {
        if (c) out += ' ';
        out += image.at(r, c) ? '1' : '0';
      }
      out += '\n';
    }
  }
  return out;
}

void write_pbm(const std::filesystem::path& path, const GlyphImage& image, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string bytes = encode_pbm(image, binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace glyphstack
