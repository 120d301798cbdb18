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

#include "tfc/config_file.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace tfc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void KeyValues::set(const std::string& key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  values_[key] = buf;
}

std::string KeyValues::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: missing key '" + key + "'");
  return it->second;
}

int64_t KeyValues::get_int(const std::string& key) const {
  const std::string v = get(key);
  int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' is not an integer: " + v);
  }
  return out;
}

double KeyValues::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config: '" + key + "' is not a number: " + v);
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: '" + key + "' is not a boolean: " + v);
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}
int64_t KeyValues::get_int(const std::string& key, int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

void KeyValues::write_body(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

void KeyValues::write(std::ostream& out) const {
  out << "# tfcodec-config " << kConfigVersion << '\n';
  write_body(out);
}

KeyValues KeyValues::parse(std::istream& in) {
  KeyValues kv;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "# tfcodec-config " + std::to_string(kConfigVersion)) {
    throw std::invalid_argument("config: expected header '# tfcodec-config " +
                                std::to_string(kConfigVersion) + "'");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " has no '='");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  return parse(in);
}

void KeyValues::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  write(out);
}

}  // namespace tfc
