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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace glyphstack {

// Flat key=value configuration. Pairs are separated by newlines or commas;
// a comma-separated fragment without '=' continues the previous value, so
// `chars=1,2,3, seed=4` yields chars="1,2,3" and seed="4". '#' starts a
// comment.
class KeyValues {
 public:
  static KeyValues parse(std::string_view text);
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size_or(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, std::size_t value) { values_[key] = std::to_string(value); }
  void set_double(const std::string& key, double value);
  void set_sizes(const std::string& key, const std::vector<std::size_t>& values);

  const std::map<std::string, std::string>& entries() const { return values_; }
  // Canonical form: sorted keys, one `key=value` per line.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
std::string format_double(double value);  // round-trippable
std::string join_sizes(const std::vector<std::size_t>& values);
std::vector<std::size_t> parse_sizes(std::string_view text);

}  // namespace glyphstack
