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

#include "tfc/autoencoder.hpp"

#include <cmath>
#include <stdexcept>

#include "tfc/ops.hpp"

namespace tfc {

namespace {

constexpr double kPedestal = 1.0 / 68719476736.0;  // 2^-36
const double kSqrtPedestal = std::sqrt(kPedestal);

Tensor bounded_square(const Tensor& raw, double floor) {
  return add_scalar(square(lower_bound(raw, std::sqrt(floor + kPedestal))), -kPedestal);
}

double unbounded_root(double value) { return std::sqrt(value + kPedestal); }

}  // namespace

Gdn::Gdn(int64_t channels, bool inverse, double gamma_init)
    : channels_(channels), inverse_(inverse) {
  beta_raw_ = Tensor::full({channels}, unbounded_root(1.0));
  std::vector<double> g(static_cast<size_t>(channels * channels), kSqrtPedestal);
  for (int64_t i = 0; i < channels; ++i) g[i * channels + i] = unbounded_root(gamma_init);
  gamma_raw_ = Tensor::from_data({channels, channels}, std::move(g));
}

Tensor Gdn::beta() const { return bounded_square(beta_raw_, kGdnBetaMin); }
Tensor Gdn::gamma() const { return bounded_square(gamma_raw_, 0.0); }

void Gdn::set(const std::vector<double>& beta, const std::vector<double>& gamma) {
  if (static_cast<int64_t>(beta.size()) != channels_ ||
      static_cast<int64_t>(gamma.size()) != channels_ * channels_) {
    throw std::invalid_argument("Gdn::set: parameter sizes do not match channel count");
  }
  auto b = beta_raw_.mutable_data();
  for (int64_t i = 0; i < channels_; ++i) b[i] = unbounded_root(std::max(beta[i], kGdnBetaMin));
  auto g = gamma_raw_.mutable_data();
  for (size_t i = 0; i < gamma.size(); ++i) g[i] = unbounded_root(std::max(gamma[i], 0.0));
}

Tensor Gdn::operator()(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != channels_) {
    throw ShapeError("gdn: input " + shape_str(x.shape()) + " vs " + std::to_string(channels_) +
                     " channels");
  }
  const Tensor g = reshape(gamma(), {channels_, channels_, 1, 1});
  const Tensor norm = sqrt(conv2d(square(x), g, beta(), 1, 0));
  return inverse_ ? mul(x, norm) : div(x, norm);
}

void Gdn::collect(const std::string& prefix, ParamList& out) {
  register_param(out, prefix + ".beta", beta_raw_);
  register_param(out, prefix + ".gamma", gamma_raw_);
}

Conv2d::Conv2d(int64_t in, int64_t out, int64_t k, int64_t stride_, int64_t pad_, Rng& rng)
    : weight(trunc_normal({out, in, k, k}, rng, 1.0 / std::sqrt(static_cast<double>(in * k * k)))),
      bias(Tensor::zeros({out})),
      stride(stride_),
      pad(pad_) {}

Tensor Conv2d::operator()(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }

void Conv2d::collect(const std::string& prefix, ParamList& out) {
  register_param(out, prefix + ".weight", weight);
  register_param(out, prefix + ".bias", bias);
}

ConvTranspose2d::ConvTranspose2d(int64_t in, int64_t out, int64_t k, int64_t stride_,
                                 int64_t pad_, int64_t output_pad_, Rng& rng)
    : weight(trunc_normal({in, out, k, k}, rng,
                          1.0 / std::sqrt(static_cast<double>(in * k * k) /
                                          static_cast<double>(stride_ * stride_)))),
      bias(Tensor::zeros({out})),
      stride(stride_),
      pad(pad_),
      output_pad(output_pad_) {}

Tensor ConvTranspose2d::operator()(const Tensor& x) const {
  return conv_transpose2d(x, weight, bias, stride, pad, output_pad);
}

void ConvTranspose2d::collect(const std::string& prefix, ParamList& out) {
  register_param(out, prefix + ".weight", weight);
  register_param(out, prefix + ".bias", bias);
}

Autoencoder::Autoencoder(int64_t channels, int64_t latent_channels, Rng& rng)
    : channels_(channels), latent_channels_(latent_channels) {
  const int64_t enc_in[4] = {3, channels, channels, channels};
  const int64_t enc_out[4] = {channels, channels, channels, latent_channels};
  for (int i = 0; i < 4; ++i) {
    enc_.emplace_back(enc_in[i], enc_out[i], 5, 2, 2, rng);
    if (i < 3) gdn_.emplace_back(channels, false);
  }
  for (int i = 0; i < 4; ++i) {
    dec_.emplace_back(i == 0 ? latent_channels : channels, channels, 5, 2, 2, 1, rng);
    igdn_.emplace_back(channels, true);
  }
  to_rgb_ = Conv2d(channels, 3, 1, 1, 0, rng);
  for (auto& b : to_rgb_.bias.mutable_data()) b = 0.5;  // mid-grey start
}

Tensor Autoencoder::encode(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) % 16 || x.dim(3) % 16) {
    throw ShapeError("encode_image: input " + shape_str(x.shape()) +
                     " must be [B, 3, H, W] with H and W divisible by 16");
  }
  Tensor h = x;
  for (size_t i = 0; i < enc_.size(); ++i) {
    h = enc_[i](h);
    if (i < gdn_.size()) h = gdn_[i](h);
  }
  return h;
}

Tensor Autoencoder::decode(const Tensor& y, bool clamp) const {
  if (y.rank() != 4 || y.dim(1) != latent_channels_) {
    throw ShapeError("decode_image: latents " + shape_str(y.shape()));
  }
  Tensor h = y;
  for (size_t i = 0; i < dec_.size(); ++i) h = igdn_[i](dec_[i](h));
  h = to_rgb_(h);
  if (!clamp) return h;
  std::vector<double> v(h.data().begin(), h.data().end());
  for (auto& e : v) e = std::min(1.0, std::max(0.0, e));
  return make_result("clamp01", h.shape(), std::move(v), {h}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (size_t i = 0; i < g.size(); ++i) {
      const double x = self.parents[0]->data[i];
      if (x >= 0.0 && x <= 1.0) g[i] += self.grad[i];
    }
  });
}

void Autoencoder::collect(const std::string& prefix, ParamList& out) {
  for (size_t i = 0; i < enc_.size(); ++i) enc_[i].collect(prefix + ".enc" + std::to_string(i), out);
  for (size_t i = 0; i < gdn_.size(); ++i) gdn_[i].collect(prefix + ".gdn" + std::to_string(i), out);
  for (size_t i = 0; i < dec_.size(); ++i) dec_[i].collect(prefix + ".dec" + std::to_string(i), out);
  for (size_t i = 0; i < igdn_.size(); ++i) igdn_[i].collect(prefix + ".igdn" + std::to_string(i), out);
  to_rgb_.collect(prefix + ".rgb", out);
}

}  // namespace tfc
