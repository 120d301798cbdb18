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

// The .etf container: a fixed little-endian header followed by
// length-prefixed range-coded segments.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tfc/model.hpp"

namespace tfc {

inline constexpr uint8_t kBitstreamVersion = 1;

struct BitstreamHeader {
  CodecMode mode = CodecMode::serial;
  bool bidirectional = true;
  uint32_t width = 0;   // true image extent, before padding
  uint32_t height = 0;
  uint64_t model_hash = 0;
  double lambda = 0.0;
  uint16_t latent_channels = 0, latent_h = 0, latent_w = 0;
  uint16_t hyper_channels = 0, hyper_h = 0, hyper_w = 0;  // zero without hyperprior
  int32_t y_min = 0, y_max = 0;
  int32_t z_min = 0, z_max = 0;
};

/// Segments: hyper-latents (if any), then the single serial segment or
/// slice 1 and slice 2.
struct Bitstream {
  BitstreamHeader header;
  std::vector<std::vector<uint8_t>> segments;
};

std::vector<uint8_t> serialize(const Bitstream& stream);
/// Throws StreamError on a bad magic, version or truncated container.
Bitstream parse_bitstream(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace tfc
