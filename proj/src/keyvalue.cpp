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

#include "glyphstack/keyvalue.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glyphstack/error.hpp"

namespace glyphstack {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t parse_size(std::string_view text, const std::string& key) {
  text = trim(text);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw DataError("'" + key + "': expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

KeyValues KeyValues::parse(std::string_view text) {
  KeyValues kv;
  std::string last_key;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    last_key.clear();
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string_view::npos) comma = line.size();
      const std::string_view fragment = trim(line.substr(pos, comma - pos));
      pos = comma + 1;
      if (fragment.empty()) continue;
      const auto eq = fragment.find('=');
      if (eq == std::string_view::npos) {
        if (last_key.empty()) throw DataError("config: '" + std::string(fragment) + "' is not key=value");
        kv.values_[last_key] += "," + std::string(fragment);
        continue;
      }
      last_key = std::string(trim(fragment.substr(0, eq)));
      if (last_key.empty()) throw DataError("config: empty key");
      kv.values_[last_key] = std::string(trim(fragment.substr(eq + 1)));
    }
    if (end == text.size()) break;
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const std::string& KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw DataError("config: missing key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::size_t KeyValues::get_size(const std::string& key) const { return parse_size(get(key), key); }

std::size_t KeyValues::get_size_or(const std::string& key, std::size_t fallback) const {
  return has(key) ? get_size(key) : fallback;
}

std::uint64_t KeyValues::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string_view text = trim(get(key));
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw DataError("'" + key + "': expected an unsigned integer");
  }
  return value;
}

double KeyValues::get_double(const std::string& key) const {
  const std::string& text = get(key);
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw DataError("'" + key + "': expected a number, got '" + text + "'");
  }
}

double KeyValues::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::vector<std::size_t> KeyValues::get_sizes(const std::string& key) const {
  return has(key) ? parse_sizes(get(key)) : std::vector<std::size_t>{};
}

void KeyValues::set_double(const std::string& key, double value) { values_[key] = format_double(value); }

void KeyValues::set_sizes(const std::string& key, const std::vector<std::size_t>& values) {
  values_[key] = join_sizes(values);
}

std::string KeyValues::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(pos, comma - pos));
    if (!item.empty()) {
      // Inclusive ranges such as 11-40 are accepted.
      if (const auto dash = item.find('-'); dash != std::string_view::npos && dash > 0) {
        const std::size_t lo = parse_size(item.substr(0, dash), "range");
        const std::size_t hi = parse_size(item.substr(dash + 1), "range");
        if (hi < lo) throw DataError("range '" + std::string(item) + "' is reversed");
        for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(parse_size(item, "list"));
      }
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace glyphstack
