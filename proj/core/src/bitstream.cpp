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

#include "tfc/bitstream.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "tfc/coder.hpp"

namespace tfc {

namespace {

constexpr char kMagic[4] = {'E', 'T', 'F', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    const U u = static_cast<U>(v);
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
  }
  void put_f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put(bits);
  }
  std::vector<uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> b) : bytes(b) {}
  template <typename T>
  T get() {
    using U = std::make_unsigned_t<T>;
    need(sizeof(T));
    U u = 0;
    for (size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(bytes[pos++]) << (8 * i));
    return static_cast<T>(u);
  }
  double get_f64() {
    const uint64_t bits = get<uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  void need(size_t n) const {
    if (bytes.size() - pos < n) throw StreamError("bitstream: truncated container");
  }
  std::span<const uint8_t> bytes;
  size_t pos = 0;
};

}  // namespace

std::vector<uint8_t> serialize(const Bitstream& s) {
  const auto& h = s.header;
  Writer w;
  w.out.insert(w.out.end(), std::begin(kMagic), std::end(kMagic));
  w.put<uint8_t>(kBitstreamVersion);
  w.put<uint8_t>(h.mode == CodecMode::serial ? 0 : 1);
  w.put<uint8_t>(h.bidirectional ? 1 : 0);
  w.put<uint8_t>(static_cast<uint8_t>(s.segments.size()));
  w.put(h.width);
  w.put(h.height);
  w.put(h.model_hash);
  w.put_f64(h.lambda);
  for (uint16_t v : {h.latent_channels, h.latent_h, h.latent_w, h.hyper_channels, h.hyper_h, h.hyper_w}) {
    w.put(v);
  }
  for (int32_t v : {h.y_min, h.y_max, h.z_min, h.z_max}) w.put(v);
  for (const auto& seg : s.segments) w.put(static_cast<uint32_t>(seg.size()));
  for (const auto& seg : s.segments) w.out.insert(w.out.end(), seg.begin(), seg.end());
  return w.out;
}

Bitstream parse_bitstream(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw StreamError("bitstream: bad magic");
  r.pos = 4;
  Bitstream s;
  auto& h = s.header;
  if (const auto v = r.get<uint8_t>(); v != kBitstreamVersion) {
    throw StreamError("bitstream: unsupported version " + std::to_string(v));
  }
  const auto mode = r.get<uint8_t>();
  if (mode > 1) throw StreamError("bitstream: bad mode byte");
  h.mode = mode == 0 ? CodecMode::serial : CodecMode::parallel;
  h.bidirectional = r.get<uint8_t>() != 0;
  const auto nseg = r.get<uint8_t>();
  h.width = r.get<uint32_t>();
  h.height = r.get<uint32_t>();
  h.model_hash = r.get<uint64_t>();
  h.lambda = r.get_f64();
  for (uint16_t* v : {&h.latent_channels, &h.latent_h, &h.latent_w, &h.hyper_channels, &h.hyper_h, &h.hyper_w}) {
    *v = r.get<uint16_t>();
  }
  for (int32_t* v : {&h.y_min, &h.y_max, &h.z_min, &h.z_max}) *v = r.get<int32_t>();
  std::vector<uint32_t> lengths(nseg);
  for (auto& l : lengths) l = r.get<uint32_t>();
  for (uint32_t l : lengths) {
    r.need(l);
    s.segments.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos),
                            bytes.begin() + static_cast<std::ptrdiff_t>(r.pos + l));
    r.pos += l;
  }
  if (r.pos != bytes.size()) throw StreamError("bitstream: trailing bytes after last segment");
  return s;
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace tfc
