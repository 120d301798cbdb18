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

// Integer frequency tables and a byte-oriented range coder.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tfc {

inline constexpr int kCdfPrecisionBits = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

/// Cumulative counts over the symbols s_min..s_max. cum has one entry more
/// than there are symbols; cum.front() == 0, cum.back() == kCdfTotal and
/// every symbol has a count of at least 1.
struct QuantizedCdf {
  int32_t s_min = 0;
  int32_t s_max = -1;
  std::vector<uint32_t> cum;

  int64_t size() const { return static_cast<int64_t>(s_max) - s_min + 1; }
  uint32_t count(int32_t symbol) const { return cum[symbol - s_min + 1] - cum[symbol - s_min]; }
  double probability(int32_t symbol) const {
    return static_cast<double>(count(symbol)) / static_cast<double>(kCdfTotal);
  }
  bool contains(int32_t symbol) const { return symbol >= s_min && symbol <= s_max; }
};

/// Standard normal CDF through the Numerical Recipes erfc rational
/// approximation (fractional error below 1.2e-7). Used for every coding
/// table so that encoder and decoder share one definition.
double coder_normal_cdf(double x);

/// Integerizes a probability vector: floor(p * 2^16) with a floor of one
/// count, then the remaining counts go out by largest remainder (ties to the
/// lower index). If the floor overshoots, counts are taken back one per
/// symbol starting from the smallest remainder. Throws if there are more symbols than counts.
QuantizedCdf quantize_pmf(const std::vector<double>& p, int32_t s_min);

/// Table for a discretized N(mu, sigma) on [s_min, s_max]; the mass beyond
/// either end is assigned to the edge symbol.
QuantizedCdf build_cdf(double mu, double sigma, int32_t s_min, int32_t s_max);

/// Range coder with 32-bit range and carry propagation through a cached
/// byte. The leading byte such coders always emit as zero is omitted, and
/// the flush writes only as many bytes as the final interval needs.
class RangeEncoder {
 public:
  void encode(uint32_t start, uint32_t freq);
  void encode_symbol(int32_t symbol, const QuantizedCdf& cdf);
  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);
  int32_t decode_symbol(const QuantizedCdf& cdf);
  // Bytes consumed so far, including implicit padding.
  size_t position() const { return pos_; }
  // Throws StreamError if bytes remain unread, which means the tables used
  // for decoding differ from those used for encoding.
  void finish() const;

 private:
  uint8_t next_byte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

/// Thrown when a stream ends before the decoder is done or decodes to an
/// impossible state.
class StreamError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<uint8_t> range_encode(const std::vector<int32_t>& symbols,
                                  const std::vector<QuantizedCdf>& cdfs);
std::vector<int32_t> range_decode(std::span<const uint8_t> bytes,
                                  const std::vector<QuantizedCdf>& cdfs);

}  // namespace tfc
