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

// Quantization, likelihoods and the rate-distortion objective.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfc/nn.hpp"
#include "tfc/random.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

// Smallest probability any symbol is charged; one count out of 2^17 matches
// half a count of the coder's 16-bit tables.
inline constexpr double kProbFloor = 1.0 / 131072.0;
inline constexpr double kSigmaFloor = 1e-6;

/// Round half away from zero. Carries no gradient.
Tensor quantize_round(const Tensor& y);
double round_half_away(double v);
/// y + U(-0.5, 0.5), noise drawn per element.
Tensor quantize_noise(const Tensor& y, Rng& rng);
/// Forward value round(y), identity gradient.
Tensor round_straight_through(const Tensor& y);

/// P(Y = yhat) for Y ~ N(mu, sigma) convolved with U(-0.5, 0.5). Evaluated on
/// |yhat - mu| with the lower tail differenced, which keeps far-tail
/// probabilities accurate. clamp applies the kProbFloor lower bound.
Tensor gaussian_likelihood(const Tensor& yhat, const Tensor& mu, const Tensor& sigma,
                           bool clamp = true);
double gaussian_likelihood(double yhat, double mu, double sigma, bool clamp = true);

/// -sum(log2 p).
Tensor rate_bits(const Tensor& p);
double rate_bits_value(const std::vector<double>& p);

/// Per-channel learned monotone CDF: a chain of 1 -> 3 -> 3 -> 3 -> 1 maps
/// with softplus-positive matrices and tanh gating, closed by a sigmoid.
class FactorizedDensity {
 public:
  FactorizedDensity() = default;
  FactorizedDensity(int64_t channels, Rng& rng, double init_scale = 2.0);

  int64_t channels() const { return channels_; }

  /// x: [N, C] -> pre-sigmoid CDF logits [N, C].
  Tensor cdf_logits(const Tensor& x) const;
  /// x: [N, C] -> CDF values.
  Tensor cdf(const Tensor& x) const;
  /// zhat: [B, C, h, w] -> per-element probabilities, same shape.
  Tensor likelihood(const Tensor& zhat, bool clamp = true) const;
  /// Unclamped probabilities of the integers s_min..s_max for one channel.
  std::vector<double> pmf(int64_t channel, int64_t s_min, int64_t s_max) const;

  void collect(const std::string& prefix, ParamList& out);

 private:
  int64_t channels_ = 0;
  std::vector<Tensor> matrices_;  // [C, out, in]
  std::vector<Tensor> biases_;    // [C, out]
  std::vector<Tensor> factors_;   // [C, out]
};

struct RdLoss {
  Tensor total;               // differentiable
  double rate_latents = 0.0;  // bpp
  double rate_hyper = 0.0;    // bpp
  double distortion = 0.0;    // MSE on the 0..255 scale
  double lambda = 0.0;
};

/// Rates in bits per pixel, distortion as MSE of [0,1] images scaled by
/// 255^2: total = latent_bpp + hyper_bpp + lambda * D. x_hat may be undefined
/// when only rates are optimised (distortion then counts as zero).
RdLoss rd_loss(const Tensor& x, const Tensor& x_hat, const Tensor& latent_probs,
               const Tensor& hyper_probs, double lambda, double pixel_count);

}  // namespace tfc
