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

#include "tfc/entropy_model.hpp"

#include <cmath>
#include <stdexcept>

#include "tfc/ops.hpp"

namespace tfc {

namespace {

constexpr double kInvLn2 = 1.4426950408889634074;

double phi(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

}  // namespace

double round_half_away(double v) { return std::round(v); }

Tensor quantize_round(const Tensor& y) { return round_values(y); }

Tensor quantize_noise(const Tensor& y, Rng& rng) {
  return add(y, rand_uniform(y.shape(), rng, -0.5, 0.5));
}

Tensor round_straight_through(const Tensor& y) {
  const Tensor r = round_values(y);
  const Tensor delta = sub(r, y.detach());
  return add(y, delta);
}

Tensor gaussian_likelihood(const Tensor& yhat, const Tensor& mu, const Tensor& sigma, bool clamp) {
  const Tensor v = abs(sub(yhat, mu));
  const Tensor upper = normal_cdf(div(sub(Tensor::scalar(0.5), v), sigma));
  const Tensor lower = normal_cdf(div(sub(Tensor::scalar(-0.5), v), sigma));
  const Tensor p = sub(upper, lower);
  return clamp ? lower_bound(p, kProbFloor) : p;
}

double gaussian_likelihood(double yhat, double mu, double sigma, bool clamp) {
  const double v = std::fabs(yhat - mu);
  const double p = phi((0.5 - v) / sigma) - phi((-0.5 - v) / sigma);
  return clamp ? std::max(p, kProbFloor) : p;
}

Tensor rate_bits(const Tensor& p) { return mul_scalar(sum(log(p)), -kInvLn2); }

double rate_bits_value(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s -= std::log2(v);
  return s;
}

FactorizedDensity::FactorizedDensity(int64_t channels, Rng& rng, double init_scale)
    : channels_(channels) {
  const std::vector<int64_t> widths{1, 3, 3, 3, 1};
  const double layers = static_cast<double>(widths.size() - 1);
  const double scale = std::pow(init_scale, 1.0 / layers);
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const int64_t in = widths[i], out = widths[i + 1];
    // softplus(m) = 1 / (scale * in): the chain starts as a logistic CDF
    // with scale init_scale.
    const double m = std::log(std::expm1(1.0 / scale / static_cast<double>(in)));
    matrices_.push_back(Tensor::full({channels, out, in}, m));
    biases_.push_back(rand_uniform({channels, out}, rng, -0.5, 0.5));
    if (i + 2 < widths.size()) factors_.push_back(Tensor::zeros({channels, out}));
  }
}

Tensor FactorizedDensity::cdf_logits(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != channels_) {
    throw ShapeError("factorized density: input " + shape_str(x.shape()) + " vs " +
                     std::to_string(channels_) + " channels");
  }
  const int64_t n = x.dim(0);
  Tensor h = reshape(x, {n, channels_, 1});
  for (size_t i = 0; i < matrices_.size(); ++i) {
    const Tensor m = transpose(softplus(matrices_[i]), 1, 2);  // [C, in, out]
    h = permute(matmul(permute(h, {1, 0, 2}), m), {1, 0, 2});
    h = add(h, biases_[i]);
    if (i < factors_.size()) h = add(h, mul(tanh(factors_[i]), tanh(h)));
  }
  return reshape(h, {n, channels_});
}

Tensor FactorizedDensity::cdf(const Tensor& x) const { return sigmoid(cdf_logits(x)); }

Tensor FactorizedDensity::likelihood(const Tensor& zhat, bool clamp) const {
  if (zhat.rank() != 4 || zhat.dim(1) != channels_) {
    throw ShapeError("factorized likelihood: input " + shape_str(zhat.shape()));
  }
  const int64_t b = zhat.dim(0), h = zhat.dim(2), w = zhat.dim(3);
  const Tensor flat = reshape(permute(zhat, {0, 2, 3, 1}), {b * h * w, channels_});
  const Tensor lower = cdf_logits(add_scalar(flat, -0.5));
  const Tensor upper = cdf_logits(add_scalar(flat, 0.5));
  // Evaluate on the side of the median where the sigmoid is not saturated.
  std::vector<double> sign(static_cast<size_t>(flat.numel()));
  for (size_t i = 0; i < sign.size(); ++i) {
    const double s = lower.data()[i] + upper.data()[i];
    sign[i] = s > 0 ? -1.0 : (s < 0 ? 1.0 : 0.0);
    if (sign[i] == 0.0) sign[i] = 1.0;
  }
  const Tensor sg = Tensor::from_data(flat.shape(), std::move(sign));
  Tensor p = abs(sub(sigmoid(mul(sg, upper)), sigmoid(mul(sg, lower))));
  if (clamp) p = lower_bound(p, kProbFloor);
  return permute(reshape(p, {b, h, w, channels_}), {0, 3, 1, 2});
}

std::vector<double> FactorizedDensity::pmf(int64_t channel, int64_t s_min, int64_t s_max) const {
  if (channel < 0 || channel >= channels_ || s_max < s_min) {
    throw std::invalid_argument("factorized pmf: bad channel or range");
  }
  NoGradGuard ng;
  const int64_t n = s_max - s_min + 1;
  std::vector<double> z(static_cast<size_t>(n * channels_), 0.0);
  for (int64_t i = 0; i < n; ++i) z[i * channels_ + channel] = static_cast<double>(s_min + i);
  const Tensor zt = reshape(Tensor::from_data({n, channels_}, std::move(z)), {1, n, 1, channels_});
  const Tensor p = likelihood(permute(zt, {0, 3, 1, 2}), false);  // [1, C, n, 1]
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) out[i] = p.data()[channel * n + i];
  return out;
}

void FactorizedDensity::collect(const std::string& prefix, ParamList& out) {
  for (size_t i = 0; i < matrices_.size(); ++i) {
    register_param(out, prefix + ".matrix" + std::to_string(i), matrices_[i]);
    register_param(out, prefix + ".bias" + std::to_string(i), biases_[i]);
    if (i < factors_.size()) register_param(out, prefix + ".factor" + std::to_string(i), factors_[i]);
  }
}

RdLoss rd_loss(const Tensor& x, const Tensor& x_hat, const Tensor& latent_probs,
               const Tensor& hyper_probs, double lambda, double pixel_count) {
  if (!(pixel_count > 0)) throw std::invalid_argument("rd_loss: pixel_count must be positive");
  RdLoss out;
  out.lambda = lambda;
  const double inv_px = 1.0 / pixel_count;
  Tensor total = mul_scalar(rate_bits(latent_probs), inv_px);
  out.rate_latents = total.item();
  if (hyper_probs.defined()) {
    const Tensor rz = mul_scalar(rate_bits(hyper_probs), inv_px);
    out.rate_hyper = rz.item();
    total = add(total, rz);
  }
  if (x_hat.defined()) {
    if (x.shape() != x_hat.shape()) {
      throw ShapeError("rd_loss: x " + shape_str(x.shape()) + " vs x_hat " +
                       shape_str(x_hat.shape()));
    }
    const Tensor d = mul_scalar(mean(square(sub(x, x_hat))), 255.0 * 255.0);
    out.distortion = d.item();
    total = add(total, mul_scalar(d, lambda));
  }
  out.total = total;
  return out;
}

}  // namespace tfc
