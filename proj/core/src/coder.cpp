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

#include "tfc/coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tfc {

namespace {

constexpr uint32_t kTop = 1u << 24;
constexpr size_t kMaxPadding = 4;

// erfc(x) for x >= 0, Numerical Recipes "erfcc".
double erfc_nr(double x) {
  const double z = std::fabs(x);
  const double t = 1.0 / (1.0 + 0.5 * z);
  const double poly =
      -z * z - 1.26551223 +
      t * (1.00002368 +
           t * (0.37409196 +
                t * (0.09678418 +
                     t * (-0.18628806 +
                          t * (0.27886807 +
                               t * (-1.13520398 +
                                    t * (1.48851587 + t * (-0.82215223 + t * 0.17087277))))))));
  const double r = t * std::exp(poly);
  return x >= 0 ? r : 2.0 - r;
}

}  // namespace

double coder_normal_cdf(double x) { return 0.5 * erfc_nr(-x * 0.70710678118654752440); }

QuantizedCdf quantize_pmf(const std::vector<double>& p, int32_t s_min) {
  const size_t n = p.size();
  if (n == 0) throw std::invalid_argument("quantize_pmf: empty alphabet");
  if (n > kCdfTotal) {
    throw std::invalid_argument("quantize_pmf: " + std::to_string(n) +
                                " symbols exceed the count budget " + std::to_string(kCdfTotal));
  }
  double mass = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("quantize_pmf: invalid probability");
    mass += v;
  }
  std::vector<uint32_t> counts(n, 1);
  if (mass > 0.0) {
    std::vector<double> frac(n);
    int64_t used = 0;
    for (size_t i = 0; i < n; ++i) {
      const double target = p[i] / mass * static_cast<double>(kCdfTotal);
      const double fl = std::floor(target);
      counts[i] = std::max<uint32_t>(1, static_cast<uint32_t>(fl));
      used += counts[i];
      frac[i] = counts[i] > fl ? 0.0 : target - fl;
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    if (used < kCdfTotal) {
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return frac[a] > frac[b]; });
      for (size_t j = 0; used < kCdfTotal; ++j, ++used) ++counts[order[j % n]];
    } else if (used > kCdfTotal) {
      // The count floor overshot. One count comes off each symbol in order
      // of smallest remainder; anything left comes off the largest counts.
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return frac[a] < frac[b]; });
      for (size_t j = 0; j < n && used > kCdfTotal; ++j) {
        if (counts[order[j]] > 1) {
          --counts[order[j]];
          --used;
        }
      }
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return counts[a] > counts[b]; });
      for (size_t j = 0; used > kCdfTotal; ++j) {
        const uint32_t take = static_cast<uint32_t>(std::min<int64_t>(used - kCdfTotal, counts[order[j]] - 1));
        counts[order[j]] -= take;
        used -= take;
      }
    }
  } else {
    for (size_t i = 0; i < kCdfTotal - n; ++i) ++counts[i % n];
  }
  QuantizedCdf cdf;
  cdf.s_min = s_min;
  cdf.s_max = s_min + static_cast<int32_t>(n) - 1;
  cdf.cum.resize(n + 1);
  cdf.cum[0] = 0;
  for (size_t i = 0; i < n; ++i) cdf.cum[i + 1] = cdf.cum[i] + counts[i];
  return cdf;
}

QuantizedCdf build_cdf(double mu, double sigma, int32_t s_min, int32_t s_max) {
  if (s_max < s_min) throw std::invalid_argument("build_cdf: empty symbol range");
  if (!(sigma > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("build_cdf: invalid parameters");
  const int64_t n = static_cast<int64_t>(s_max) - s_min + 1;
  if (n > static_cast<int64_t>(kCdfTotal)) {
    throw std::invalid_argument("build_cdf: range [" + std::to_string(s_min) + ", " +
                                std::to_string(s_max) + "] too wide for the count floor");
  }
  std::vector<double> p(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(s_min + i);
    if (n == 1) {
      p[i] = 1.0;
    } else if (i == 0) {
      p[i] = coder_normal_cdf((s + 0.5 - mu) / sigma);
    } else if (i == n - 1) {
      p[i] = coder_normal_cdf((mu - (s - 0.5)) / sigma);
    } else {
      const double v = std::fabs(s - mu);
      p[i] = coder_normal_cdf((0.5 - v) / sigma) - coder_normal_cdf((-0.5 - v) / sigma);
    }
    if (p[i] < 0.0) p[i] = 0.0;
  }
  return quantize_pmf(p, s_min);
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t start, uint32_t freq) {
  if (finished_) throw std::logic_error("RangeEncoder: encode after finish");
  const uint32_t r = range_ >> kCdfPrecisionBits;
  low_ += static_cast<uint64_t>(start) * r;
  range_ = freq * r;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(int32_t symbol, const QuantizedCdf& cdf) {
  if (!cdf.contains(symbol)) {
    throw std::out_of_range("symbol " + std::to_string(symbol) + " outside [" +
                            std::to_string(cdf.s_min) + ", " + std::to_string(cdf.s_max) + "]");
  }
  const size_t i = static_cast<size_t>(symbol - cdf.s_min);
  encode(cdf.cum[i], cdf.cum[i + 1] - cdf.cum[i]);
}

std::vector<uint8_t> RangeEncoder::finish() {
  if (finished_) throw std::logic_error("RangeEncoder: finish called twice");
  finished_ = true;
  // Pick the value in [low, low + range) with the most trailing zero bytes;
  // the decoder supplies those zeros implicitly.
  const uint64_t hi = low_ + range_ - 1;
  for (int zero_bytes = 4; zero_bytes >= 0; --zero_bytes) {
    const uint64_t mask = zero_bytes == 0 ? 0 : ((uint64_t{1} << (8 * zero_bytes)) - 1);
    const uint64_t v = (low_ + mask) & ~mask;
    if (v <= hi) {
      low_ = v;
      break;
    }
  }
  for (int i = 0; i < 5; ++i) shift_low();
  // out_[0] is the constant leading zero byte.
  std::vector<uint8_t> bytes(out_.begin() + 1, out_.end());
  for (size_t trimmed = 0; trimmed < kMaxPadding && !bytes.empty() && bytes.back() == 0; ++trimmed) {
    bytes.pop_back();
  }
  return bytes;
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  const size_t i = pos_++;
  if (i < bytes_.size()) return bytes_[i];
  if (i - bytes_.size() >= kMaxPadding) throw StreamError("range decoder: truncated stream");
  return 0;
}

void RangeDecoder::finish() const {
  // A matching decoder always reads at least as many bytes as were written.
  if (pos_ < bytes_.size()) throw StreamError("range decoder: stream has unread bytes");
}

int32_t RangeDecoder::decode_symbol(const QuantizedCdf& cdf) {
  const uint32_t r = range_ >> kCdfPrecisionBits;
  const uint32_t value = code_ / r;
  if (value >= kCdfTotal) throw StreamError("range decoder: corrupt stream or table mismatch");
  // Last cum entry <= value.
  const auto it = std::upper_bound(cdf.cum.begin(), cdf.cum.end(), value);
  const size_t i = static_cast<size_t>(it - cdf.cum.begin()) - 1;
  code_ -= cdf.cum[i] * r;
  range_ = (cdf.cum[i + 1] - cdf.cum[i]) * r;
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return cdf.s_min + static_cast<int32_t>(i);
}

std::vector<uint8_t> range_encode(const std::vector<int32_t>& symbols,
                                  const std::vector<QuantizedCdf>& cdfs) {
  if (symbols.size() != cdfs.size()) {
    throw std::invalid_argument("range_encode: " + std::to_string(symbols.size()) + " symbols but " +
                                std::to_string(cdfs.size()) + " tables");
  }
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    try {
      enc.encode_symbol(symbols[i], cdfs[i]);
    } catch (const std::out_of_range& e) {
      throw std::out_of_range("range_encode: index " + std::to_string(i) + ": " + e.what());
    }
  }
  return enc.finish();
}

std::vector<int32_t> range_decode(std::span<const uint8_t> bytes,
                                  const std::vector<QuantizedCdf>& cdfs) {
  RangeDecoder dec(bytes);
  std::vector<int32_t> out;
  out.reserve(cdfs.size());
  for (const auto& c : cdfs) out.push_back(dec.decode_symbol(c));
  dec.finish();
  return out;
}

}  // namespace tfc
