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

// End-to-end coding: image -> latents -> range-coded .etf bytes and back,
// with serial (one entropy-model pass per latent position) or two-pass
// checkerboard decoding.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tfc/bitstream.hpp"
#include "tfc/model.hpp"

namespace tfc {

/// Decoding with weights other than the encoder's.
class ModelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CodecOptions {
  CodecMode mode = CodecMode::serial;
  bool bidirectional = true;  // pass-2 context in parallel mode
};
CodecOptions default_codec_options(const CompressionModel& model);

/// Image extents are padded to a multiple of this before the analysis
/// transform (16 per transform, 4 more for the hyperprior).
int64_t padding_multiple(const CompressionModel& model);

struct LatentDecode {
  Tensor yhat;  // [1, C, h, w]
  Tensor zhat;  // [1, Cz, h/4, w/4]; undefined without hyperprior
  int64_t predict_calls = 0;
  double seconds = 0.0;  // entropy decoding only
};

/// Codes latents y [1, C, h, w]. Fills the latent part of the header.
Bitstream encode_latents(const CompressionModel& model, const Tensor& y, const CodecOptions& opt,
                         Tensor* yhat_out = nullptr, Tensor* zhat_out = nullptr);
/// Dispatches on the header mode.
LatentDecode decode_latents(const CompressionModel& model, const Bitstream& stream);
LatentDecode decode_latents_serial(const CompressionModel& model, const Bitstream& stream);
LatentDecode decode_latents_parallel(const CompressionModel& model, const Bitstream& stream);

struct EncodeResult {
  std::vector<uint8_t> bytes;
  Tensor yhat;
  Tensor zhat;
  Tensor x_hat;  // the reconstruction the decoder will produce
};

struct DecodeResult {
  Tensor x_hat;  // [1, 3, H, W] in [0, 1], cropped to the true extent
  LatentDecode latents;
};

/// x: [1, 3, H, W] in [0, 1], any extent.
EncodeResult encode(const CompressionModel& model, const Tensor& x, const CodecOptions& opt);
/// Throws ModelMismatch if the stream names other weights, StreamError on a
/// damaged stream.
DecodeResult decode(const CompressionModel& model, std::span<const uint8_t> bytes);
DecodeResult decode_serial(const CompressionModel& model, std::span<const uint8_t> bytes);
DecodeResult decode_parallel(const CompressionModel& model, std::span<const uint8_t> bytes);

inline constexpr double kPsnrCap = 100.0;

struct Metrics {
  double bpp = 0.0;
  double psnr = 0.0;
};

/// PSNR on the 8-bit scale, capped at kPsnrCap for identical images.
double psnr(const Tensor& x, const Tensor& x_hat);
/// bpp = 8 * bytes / (H * W).
Metrics eval_metrics(const Tensor& x, const Tensor& x_hat, size_t bytes);

}  // namespace tfc
