// Copyright 2026 The tfcodec Authors.
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

// Versioned "key = value" text files. Line one is "# tfcodec-config <v>";
// further lines starting with '#' are comments.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

namespace tfc {

inline constexpr int kConfigVersion = 1;

class KeyValues {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, int64_t value) { values_[key] = std::to_string(value); }
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
  void set(const std::string& key, const char* value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  // Getters throw std::invalid_argument on a missing key or a bad value.
  std::string get(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  // Body only: one "key = value" per line, sorted by key.
  void write_body(std::ostream& out) const;
  void write(std::ostream& out) const;  // with the version line
  static KeyValues parse(std::istream& in);
  static KeyValues load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tfc
