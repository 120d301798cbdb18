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

// Convolutional analysis/synthesis transforms with (inverse) generalized
// divisive normalization.

#pragma once

#include <string>
#include <vector>

#include "tfc/nn.hpp"
#include "tfc/random.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

inline constexpr double kGdnBetaMin = 1e-6;

/// y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2) per spatial position, or
/// x_i * sqrt(...) when inverse. beta and gamma are stored through a
/// lower-bounded square so that beta >= kGdnBetaMin and gamma >= 0.
class Gdn {
 public:
  Gdn() = default;
  Gdn(int64_t channels, bool inverse, double gamma_init = 0.1);

  Tensor operator()(const Tensor& x) const;
  bool inverse() const { return inverse_; }
  Tensor beta() const;   // [C]
  Tensor gamma() const;  // [C, C]
  // Sets the effective parameters (test hook and checkpoint-free setup).
  void set(const std::vector<double>& beta, const std::vector<double>& gamma);

  void collect(const std::string& prefix, ParamList& out);

 private:
  int64_t channels_ = 0;
  bool inverse_ = false;
  Tensor beta_raw_;
  Tensor gamma_raw_;
};

struct Conv2d {
  Tensor weight;  // [out, in, k, k]
  Tensor bias;    // [out]
  int64_t stride = 1;
  int64_t pad = 0;

  Conv2d() = default;
  Conv2d(int64_t in, int64_t out, int64_t k, int64_t stride, int64_t pad, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

struct ConvTranspose2d {
  Tensor weight;  // [in, out, k, k]
  Tensor bias;
  int64_t stride = 2;
  int64_t pad = 2;
  int64_t output_pad = 1;

  ConvTranspose2d() = default;
  ConvTranspose2d(int64_t in, int64_t out, int64_t k, int64_t stride, int64_t pad,
                  int64_t output_pad, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

/// g_a: four 5x5 stride-2 convolutions with GDN in between (3 -> N -> N -> N
/// -> C). g_s mirrors it with transposed convolutions and IGDN, then projects
/// to RGB with a 1x1 convolution.
class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(int64_t channels, int64_t latent_channels, Rng& rng);

  int64_t channels() const { return channels_; }
  int64_t latent_channels() const { return latent_channels_; }

  /// x: [B, 3, H, W] with H, W divisible by 16 -> y: [B, C, H/16, W/16].
  Tensor encode(const Tensor& x) const;
  /// y: [B, C, h, w] -> [B, 3, 16h, 16w]; clamp to [0, 1] when requested.
  Tensor decode(const Tensor& y, bool clamp) const;

  void collect(const std::string& prefix, ParamList& out);

 private:
  int64_t channels_ = 0;
  int64_t latent_channels_ = 0;
  std::vector<Conv2d> enc_;
  std::vector<Gdn> gdn_;
  std::vector<ConvTranspose2d> dec_;
  std::vector<Gdn> igdn_;
  Conv2d to_rgb_;
};

}  // namespace tfc
