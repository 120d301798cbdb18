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

#include "tfc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "tfc/coder.hpp"
#include "tfc/image.hpp"
#include "tfc/ops.hpp"

namespace tfc {

namespace {

// Both coding directions run here: 32-bit storage, no tape.
struct InferenceScope {
  PrecisionScope precision{Precision::f32};
  NoGradGuard no_grad;
};

int32_t to_symbol(double v) {
  if (!(std::fabs(v) < 1e9)) throw std::runtime_error("latent value out of coding range");
  return static_cast<int32_t>(v);
}

void symbol_range(const Tensor& t, int32_t& lo, int32_t& hi) {
  const auto d = t.data();
  lo = std::numeric_limits<int32_t>::max();
  hi = std::numeric_limits<int32_t>::min();
  for (double v : d) {
    lo = std::min(lo, to_symbol(v));
    hi = std::max(hi, to_symbol(v));
  }
  if (static_cast<int64_t>(hi) - lo + 1 > static_cast<int64_t>(kCdfTotal)) {
    throw std::runtime_error("latent range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                             "] too wide for " + std::to_string(kCdfPrecisionBits) + "-bit tables");
  }
}

std::vector<QuantizedCdf> hyper_tables(const CompressionModel& model, int32_t z_min, int32_t z_max) {
  std::vector<QuantizedCdf> out;
  for (int64_t c = 0; c < model.config().entropy.hyper_channels; ++c) {
    out.push_back(quantize_pmf(model.hyper_density().pmf(c, z_min, z_max), z_min));
  }
  return out;
}

// Position-major, channel-minor symbols and tables for the rows in positions.
void append_rows(const GaussianParams& params, const std::vector<double>& tokens, int64_t channels,
                 const std::vector<int64_t>& positions, int32_t y_min, int32_t y_max,
                 RangeEncoder& enc) {
  const auto mu = params.mu.data();
  const auto sigma = params.sigma.data();
  for (size_t r = 0; r < positions.size(); ++r) {
    for (int64_t c = 0; c < channels; ++c) {
      const size_t k = r * channels + c;
      const QuantizedCdf cdf = build_cdf(mu[k], sigma[k], y_min, y_max);
      enc.encode_symbol(to_symbol(tokens[positions[r] * channels + c]), cdf);
    }
  }
}

void decode_rows(const GaussianParams& params, std::vector<double>& tokens, int64_t channels,
                 const std::vector<int64_t>& positions, int32_t y_min, int32_t y_max,
                 RangeDecoder& dec) {
  const auto mu = params.mu.data();
  const auto sigma = params.sigma.data();
  for (size_t r = 0; r < positions.size(); ++r) {
    for (int64_t c = 0; c < channels; ++c) {
      const size_t k = r * channels + c;
      const QuantizedCdf cdf = build_cdf(mu[k], sigma[k], y_min, y_max);
      tokens[positions[r] * channels + c] = dec.decode_symbol(cdf);
    }
  }
}

std::vector<int64_t> all_positions(int64_t n) {
  std::vector<int64_t> v(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

Tensor rows_or_undefined(const Tensor& t, const std::vector<int64_t>& rows) {
  return t.defined() ? index_select(t, 1, rows) : Tensor();
}

struct Side {
  Tensor zhat;
  Tensor hyper;  // [1, n, d] or undefined
};

Side decode_side(const CompressionModel& model, const Bitstream& s, size_t& segment) {
  const auto& h = s.header;
  const auto& ec = model.config().entropy;
  Side side;
  if (!ec.use_hyper) return side;
  const int64_t cz = h.hyper_channels, hh = h.hyper_h, hw = h.hyper_w;
  const auto tables = hyper_tables(model, h.z_min, h.z_max);
  RangeDecoder dec(s.segments.at(segment++));
  std::vector<double> z(static_cast<size_t>(cz * hh * hw));
  for (size_t i = 0; i < z.size(); ++i) z[i] = dec.decode_symbol(tables[i / (hh * hw)]);
  dec.finish();
  side.zhat = Tensor::from_data({1, cz, hh, hw}, std::move(z));
  side.hyper = model.entropy().hyper_decode(side.zhat, h.latent_h, h.latent_w);
  return side;
}

void check_stream(const CompressionModel& model, const Bitstream& s, CodecMode expected) {
  const auto& h = s.header;
  if (h.mode != expected) {
    throw std::invalid_argument(std::string("bitstream was encoded in ") + codec_mode_name(h.mode) +
                                " mode, not " + codec_mode_name(expected));
  }
  if (h.model_hash != model.hash()) {
    throw ModelMismatch("bitstream was produced with different model weights (stream hash " +
                        std::to_string(h.model_hash) + ", model hash " +
                        std::to_string(model.hash()) + ")");
  }
  const auto& ec = model.config().entropy;
  const size_t expected_segments = (ec.use_hyper ? 1 : 0) + (expected == CodecMode::serial ? 1 : 2);
  if (h.latent_channels != ec.latent_channels || s.segments.size() != expected_segments ||
      h.latent_h == 0 || h.latent_w == 0 || (ec.use_hyper && h.hyper_channels != ec.hyper_channels)) {
    throw StreamError("bitstream layout does not match the model");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

CodecOptions default_codec_options(const CompressionModel& model) {
  return {model.config().mode, model.config().bidirectional};
}

int64_t padding_multiple(const CompressionModel& model) {
  return model.config().entropy.use_hyper ? 64 : 16;
}

Bitstream encode_latents(const CompressionModel& model, const Tensor& y, const CodecOptions& opt,
                         Tensor* yhat_out, Tensor* zhat_out) {
  InferenceScope scope;
  const auto& ec = model.config().entropy;
  const auto& em = model.entropy();
  if (y.rank() != 4 || y.dim(0) != 1 || y.dim(1) != ec.latent_channels) {
    throw ShapeError("encode_latents: expected [1, " + std::to_string(ec.latent_channels) +
                     ", h, w], got " + shape_str(y.shape()));
  }
  const int64_t C = ec.latent_channels, lh = y.dim(2), lw = y.dim(3);
  const PositionGrid grid(lh, lw);
  const int64_t n = grid.tokens();

  Bitstream s;
  auto& h = s.header;
  h.mode = opt.mode;
  h.bidirectional = opt.bidirectional;
  h.model_hash = model.hash();
  h.lambda = model.config().lambda;
  h.latent_channels = static_cast<uint16_t>(C);
  h.latent_h = static_cast<uint16_t>(lh);
  h.latent_w = static_cast<uint16_t>(lw);

  const Tensor yhat = quantize_round(y);
  symbol_range(yhat, h.y_min, h.y_max);
  Tensor hyper;
  if (ec.use_hyper) {
    const Tensor zhat = quantize_round(em.hyper_encode(y));
    symbol_range(zhat, h.z_min, h.z_max);
    h.hyper_channels = static_cast<uint16_t>(zhat.dim(1));
    h.hyper_h = static_cast<uint16_t>(zhat.dim(2));
    h.hyper_w = static_cast<uint16_t>(zhat.dim(3));
    const auto tables = hyper_tables(model, h.z_min, h.z_max);
    const int64_t plane = zhat.dim(2) * zhat.dim(3);
    RangeEncoder enc;
    const auto zd = zhat.data();
    for (size_t i = 0; i < zd.size(); ++i) enc.encode_symbol(to_symbol(zd[i]), tables[i / plane]);
    s.segments.push_back(enc.finish());
    hyper = em.hyper_decode(zhat, lh, lw);
    if (zhat_out) *zhat_out = zhat;
  }
  if (yhat_out) *yhat_out = yhat;

  const Tensor tokens_t = image_to_tokens(yhat);
  const std::vector<double> tokens(tokens_t.data().begin(), tokens_t.data().end());
  if (opt.mode == CodecMode::serial) {
    // One teacher-forced causal pass yields exactly the parameters the
    // decoder computes step by step.
    const Tensor ctx = ec.use_context ? em.context_features(tokens_t, hyper, serial_plan(n), grid)
                                      : Tensor();
    const GaussianParams params = em.predict_params(hyper, ctx);
    RangeEncoder enc;
    append_rows(params, tokens, C, all_positions(n), h.y_min, h.y_max, enc);
    s.segments.push_back(enc.finish());
  } else {
    const auto s1 = slice_positions(grid, 1);
    const Tensor zeros1 = em.zero_features(1, static_cast<int64_t>(s1.size()));
    const GaussianParams p1 = em.predict_params(rows_or_undefined(hyper, s1), zeros1);
    RangeEncoder enc1;
    append_rows(p1, tokens, C, s1, h.y_min, h.y_max, enc1);
    s.segments.push_back(enc1.finish());

    const ContextPlan plan = pass2_plan(grid, opt.bidirectional);
    RangeEncoder enc2;
    if (!plan.queries.empty()) {
      const Tensor ctx = ec.use_context
                             ? em.context_features(tokens_t, hyper, plan, grid)
                             : em.zero_features(1, static_cast<int64_t>(plan.queries.size()));
      const GaussianParams p2 = em.predict_params(rows_or_undefined(hyper, plan.queries), ctx);
      append_rows(p2, tokens, C, plan.queries, h.y_min, h.y_max, enc2);
    }
    s.segments.push_back(enc2.finish());
  }
  return s;
}

LatentDecode decode_latents(const CompressionModel& model, const Bitstream& stream) {
  return stream.header.mode == CodecMode::serial ? decode_latents_serial(model, stream)
                                                 : decode_latents_parallel(model, stream);
}

LatentDecode decode_latents_serial(const CompressionModel& model, const Bitstream& stream) {
  check_stream(model, stream, CodecMode::serial);
  const auto t0 = std::chrono::steady_clock::now();
  InferenceScope scope;
  const auto& ec = model.config().entropy;
  const auto& em = model.entropy();
  const auto& h = stream.header;
  const int64_t C = ec.latent_channels;
  const PositionGrid grid(h.latent_h, h.latent_w);
  const int64_t n = grid.tokens();
  const int64_t calls0 = em.predict_calls();

  size_t segment = 0;
  LatentDecode out;
  const Side side = decode_side(model, stream, segment);
  out.zhat = side.zhat;

  std::vector<double> tokens(static_cast<size_t>(n * C), 0.0);
  RangeDecoder dec(stream.segments.at(segment));
  for (int64_t p = 0; p < n; ++p) {
    Tensor ctx;
    if (ec.use_context) {
      const Tensor cur = Tensor::from_data({1, n, C}, tokens);
      ctx = em.context_features(cur, side.hyper, serial_step_plan(p), grid);
    }
    const GaussianParams params = em.predict_params(rows_or_undefined(side.hyper, {p}), ctx);
    decode_rows(params, tokens, C, {p}, h.y_min, h.y_max, dec);
  }
  dec.finish();
  out.yhat = tokens_to_image(Tensor::from_data({1, n, C}, std::move(tokens)), h.latent_h, h.latent_w);
  out.predict_calls = em.predict_calls() - calls0;
  out.seconds = seconds_since(t0);
  return out;
}

LatentDecode decode_latents_parallel(const CompressionModel& model, const Bitstream& stream) {
  check_stream(model, stream, CodecMode::parallel);
  const auto t0 = std::chrono::steady_clock::now();
  InferenceScope scope;
  const auto& ec = model.config().entropy;
  const auto& em = model.entropy();
  const auto& h = stream.header;
  const int64_t C = ec.latent_channels;
  const PositionGrid grid(h.latent_h, h.latent_w);
  const int64_t n = grid.tokens();
  const int64_t calls0 = em.predict_calls();

  size_t segment = 0;
  LatentDecode out;
  const Side side = decode_side(model, stream, segment);
  out.zhat = side.zhat;
  std::vector<double> tokens(static_cast<size_t>(n * C), 0.0);

  // Pass 1: hyperprior only.
  const auto s1 = slice_positions(grid, 1);
  const GaussianParams p1 = em.predict_params(rows_or_undefined(side.hyper, s1),
                                              em.zero_features(1, static_cast<int64_t>(s1.size())));
  RangeDecoder dec1(stream.segments.at(segment++));
  decode_rows(p1, tokens, C, s1, h.y_min, h.y_max, dec1);
  dec1.finish();

  // Pass 2: every slice-2 position at once, attending to slice 1.
  const ContextPlan plan = pass2_plan(grid, h.bidirectional);
  RangeDecoder dec2(stream.segments.at(segment++));
  if (!plan.queries.empty()) {
    const Tensor cur = Tensor::from_data({1, n, C}, tokens);
    const Tensor ctx = ec.use_context
                           ? em.context_features(cur, side.hyper, plan, grid)
                           : em.zero_features(1, static_cast<int64_t>(plan.queries.size()));
    const GaussianParams p2 = em.predict_params(rows_or_undefined(side.hyper, plan.queries), ctx);
    decode_rows(p2, tokens, C, plan.queries, h.y_min, h.y_max, dec2);
  }
  dec2.finish();
  out.yhat = tokens_to_image(Tensor::from_data({1, n, C}, std::move(tokens)), h.latent_h, h.latent_w);
  out.predict_calls = em.predict_calls() - calls0;
  out.seconds = seconds_since(t0);
  return out;
}

EncodeResult encode(const CompressionModel& model, const Tensor& x, const CodecOptions& opt) {
  if (x.rank() != 4 || x.dim(0) != 1 || x.dim(1) != 3) {
    throw ShapeError("encode: expected an image [1, 3, H, W], got " + shape_str(x.shape()));
  }
  Tensor y;
  {
    InferenceScope scope;
    y = model.autoencoder().encode(reflect_pad(x, padding_multiple(model)));
  }
  EncodeResult r;
  Bitstream s = encode_latents(model, y, opt, &r.yhat, &r.zhat);
  s.header.height = static_cast<uint32_t>(x.dim(2));
  s.header.width = static_cast<uint32_t>(x.dim(3));
  r.bytes = serialize(s);
  {
    InferenceScope scope;
    r.x_hat = crop(model.autoencoder().decode(r.yhat, true), x.dim(2), x.dim(3));
  }
  return r;
}

namespace {

DecodeResult finish_decode(const CompressionModel& model, const Bitstream& s, LatentDecode lat) {
  InferenceScope scope;
  DecodeResult r;
  const Tensor full = model.autoencoder().decode(lat.yhat, true);
  if (s.header.height > full.dim(2) || s.header.width > full.dim(3) || s.header.height == 0 ||
      s.header.width == 0) {
    throw StreamError("bitstream image extent exceeds the decoded latents");
  }
  r.x_hat = crop(full, s.header.height, s.header.width);
  r.latents = std::move(lat);
  return r;
}

}  // namespace

DecodeResult decode(const CompressionModel& model, std::span<const uint8_t> bytes) {
  const Bitstream s = parse_bitstream(bytes);
  return finish_decode(model, s, decode_latents(model, s));
}

DecodeResult decode_serial(const CompressionModel& model, std::span<const uint8_t> bytes) {
  const Bitstream s = parse_bitstream(bytes);
  return finish_decode(model, s, decode_latents_serial(model, s));
}

DecodeResult decode_parallel(const CompressionModel& model, std::span<const uint8_t> bytes) {
  const Bitstream s = parse_bitstream(bytes);
  return finish_decode(model, s, decode_latents_parallel(model, s));
}

double psnr(const Tensor& x, const Tensor& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw ShapeError("psnr: " + shape_str(x.shape()) + " vs " + shape_str(x_hat.shape()));
  }
  const auto a = x.data(), b = x_hat.data();
  double se = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = 255.0 * (a[i] - b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

Metrics eval_metrics(const Tensor& x, const Tensor& x_hat, size_t bytes) {
  Metrics m;
  m.psnr = psnr(x, x_hat);
  m.bpp = 8.0 * static_cast<double>(bytes) / static_cast<double>(x.dim(-1) * x.dim(-2));
  return m;
}

}  // namespace tfc
