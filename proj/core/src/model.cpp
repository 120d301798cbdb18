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

#include "tfc/model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tfc/ops.hpp"

namespace tfc {

namespace {

constexpr const char* kCheckpointMagic = "ETFCKPT 1";

uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const char* codec_mode_name(CodecMode mode) {
  return mode == CodecMode::serial ? "serial" : "parallel";
}

CodecMode parse_codec_mode(const std::string& name) {
  if (name == "serial") return CodecMode::serial;
  if (name == "parallel") return CodecMode::parallel;
  throw std::invalid_argument("unknown codec mode '" + name + "' (expected serial or parallel)");
}

void ModelConfig::validate() const {
  if (ae_channels < 1) throw std::invalid_argument("model config: ae_channels must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("model config: lambda must be >= 0");
  entropy.validate();
}

KeyValues ModelConfig::to_kv() const {
  KeyValues kv;
  kv.set("ae_channels", ae_channels);
  kv.set("d_model", entropy.d_model);
  kv.set("heads", entropy.heads);
  kv.set("hyper_depth", entropy.hyper_depth);
  kv.set("context_depth", entropy.context_depth);
  kv.set("ffn_ratio", entropy.ffn_ratio);
  kv.set("latent_channels", entropy.latent_channels);
  kv.set("hyper_channels", entropy.hyper_channels);
  kv.set("topk", entropy.topk);
  kv.set("rpe_h", entropy.rpe_h);
  kv.set("pe", pe_mode_name(entropy.pe));
  kv.set("use_hyper", entropy.use_hyper);
  kv.set("use_context", entropy.use_context);
  kv.set("mode", codec_mode_name(mode));
  kv.set("bidirectional", bidirectional);
  kv.set("lambda", lambda);
  return kv;
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  ModelConfig c;
  c.ae_channels = kv.get_int("ae_channels", c.ae_channels);
  auto& e = c.entropy;
  e.d_model = kv.get_int("d_model", e.d_model);
  e.heads = kv.get_int("heads", e.heads);
  e.hyper_depth = kv.get_int("hyper_depth", e.hyper_depth);
  e.context_depth = kv.get_int("context_depth", 2 * e.hyper_depth);
  e.ffn_ratio = kv.get_int("ffn_ratio", e.ffn_ratio);
  e.latent_channels = kv.get_int("latent_channels", e.latent_channels);
  e.hyper_channels = kv.get_int("hyper_channels", e.hyper_channels);
  e.topk = kv.get_int("topk", e.topk);
  e.rpe_h = kv.get_int("rpe_h", e.rpe_h);
  e.pe = parse_pe_mode(kv.get("pe", pe_mode_name(e.pe)));
  e.use_hyper = kv.get_bool("use_hyper", e.use_hyper);
  e.use_context = kv.get_bool("use_context", e.use_context);
  c.mode = parse_codec_mode(kv.get("mode", codec_mode_name(c.mode)));
  c.bidirectional = kv.get_bool("bidirectional", c.bidirectional);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.validate();
  return c;
}

CompressionModel::CompressionModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  Rng ae_rng = rng.split();
  Rng em_rng = rng.split();
  Rng fd_rng = rng.split();
  ae_ = Autoencoder(cfg.ae_channels, cfg.entropy.latent_channels, ae_rng);
  em_ = EntropyTransformer(cfg.entropy, em_rng);
  if (cfg.entropy.use_hyper) fd_ = FactorizedDensity(cfg.entropy.hyper_channels, fd_rng);
  ae_.collect("ae", params_);
  em_.collect("entropy", params_);
  if (cfg.entropy.use_hyper) fd_.collect("hyper_density", params_);
}

ParamList CompressionModel::entropy_params() const {
  ParamList out;
  for (const auto& p : params_) {
    if (p.name.rfind("ae.", 0) != 0) out.push_back(p);
  }
  return out;
}

EntropyForward CompressionModel::entropy_forward(const Tensor& y, const EntropyOptions& opt,
                                                 Rng* rng) const {
  const auto& ec = cfg_.entropy;
  if (y.rank() != 4 || y.dim(1) != ec.latent_channels) {
    throw ShapeError("entropy_forward: latents " + shape_str(y.shape()) + " need " +
                     std::to_string(ec.latent_channels) + " channels");
  }
  if ((opt.training || opt.regime == ContextRegime::random_mask) && !rng) {
    throw std::invalid_argument("entropy_forward: this regime needs an rng");
  }
  const int64_t b = y.dim(0), h = y.dim(2), w = y.dim(3);
  const PositionGrid grid(h, w);
  const int64_t n = grid.tokens();

  EntropyForward out;
  const Tensor rate_in = opt.training ? quantize_noise(y, *rng) : quantize_round(y);
  const Tensor ctx_in = opt.training && opt.straight_through ? round_straight_through(y) : rate_in;

  Tensor hyper;
  if (ec.use_hyper) {
    const Tensor z = em_.hyper_encode(y);
    const Tensor z_rate = opt.training ? quantize_noise(z, *rng) : quantize_round(z);
    const Tensor z_in = opt.training && opt.straight_through ? round_straight_through(z) : z_rate;
    out.hyper_probs = fd_.likelihood(z_rate);
    hyper = em_.hyper_decode(z_in, h, w);
  }

  Tensor ctx;
  if (ec.use_context) {
    Tensor tokens = image_to_tokens(ctx_in);
    switch (opt.regime) {
      case ContextRegime::serial:
        ctx = em_.context_features(tokens, hyper, serial_plan(n), grid);
        break;
      case ContextRegime::parallel: {
        const ContextPlan plan = pass2_plan(grid, opt.bidirectional);
        ctx = EntropyTransformer::scatter_rows(em_.context_features(tokens, hyper, plan, grid),
                                               plan.queries, n);
        break;
      }
      case ContextRegime::random_mask: {
        out.corrupted.resize(static_cast<size_t>(b * n));
        for (auto& c : out.corrupted) c = rng->bernoulli(opt.mask_ratio) ? 1 : 0;
        std::vector<double> keep_c(static_cast<size_t>(b * n * ec.latent_channels));
        std::vector<double> keep_d(static_cast<size_t>(b * n * ec.d_model));
        for (int64_t i = 0; i < b * n; ++i) {
          const double k = out.corrupted[i] ? 0.0 : 1.0;
          std::fill_n(keep_c.begin() + i * ec.latent_channels, ec.latent_channels, k);
          std::fill_n(keep_d.begin() + i * ec.d_model, ec.d_model, k);
        }
        tokens = mul(tokens, Tensor::from_data({b, n, ec.latent_channels}, std::move(keep_c)));
        ctx = em_.context_features(tokens, hyper, random_mask_plan(n, b, out.corrupted), grid);
        ctx = mul(ctx, Tensor::from_data({b, n, ec.d_model}, std::move(keep_d)));
        break;
      }
      case ContextRegime::custom: {
        if (!opt.plan || static_cast<int64_t>(opt.plan->queries.size()) != n) {
          throw std::invalid_argument("entropy_forward: custom plan must query every position");
        }
        for (int64_t i = 0; i < n; ++i) {
          if (opt.plan->queries[i] != i) {
            throw std::invalid_argument("entropy_forward: custom plan queries must be in order");
          }
        }
        ctx = em_.context_features(tokens, hyper, *opt.plan, grid);
        break;
      }
    }
  }

  out.params = em_.predict_params(hyper, ctx);
  out.latent_probs = gaussian_likelihood(image_to_tokens(rate_in), out.params.mu, out.params.sigma);
  return out;
}

uint64_t CompressionModel::hash() const {
  std::ostringstream os;
  cfg_.to_kv().write_body(os);
  const std::string body = os.str();
  uint64_t h = fnv1a(0xcbf29ce484222325ULL, body.data(), body.size());
  for (const auto& p : params_) {
    h = fnv1a(h, p.name.data(), p.name.size());
    const auto d = p.value.data();
    h = fnv1a(h, d.data(), d.size() * sizeof(double));
  }
  return h;
}

void CompressionModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << kCheckpointMagic << '\n';
  cfg_.to_kv().write_body(out);
  out << "params = " << params_.size() << '\n' << "end\n";
  for (const auto& p : params_) {
    out << "tensor " << p.name << " f64 " << p.value.rank();
    for (int64_t d : p.value.shape()) out << ' ' << d;
    out << '\n';
    const auto d = p.value.data();
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

CompressionModel CompressionModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw std::invalid_argument("checkpoint: " + path + " is not a tfcodec checkpoint");
  }
  std::ostringstream header;
  header << "# tfcodec-config " << kConfigVersion << '\n';
  while (std::getline(in, line) && line != "end") header << line << '\n';
  if (line != "end") throw std::invalid_argument("checkpoint: truncated header in " + path);
  std::istringstream hs(header.str());
  const KeyValues kv = KeyValues::parse(hs);
  CompressionModel model(ModelConfig::from_kv(kv), 0);
  if (kv.get_int("params") != static_cast<int64_t>(model.params_.size())) {
    throw std::invalid_argument("checkpoint: parameter count does not match the configuration");
  }
  for (auto& p : model.params_) {
    if (!std::getline(in, line)) throw std::invalid_argument("checkpoint: truncated at " + p.name);
    std::istringstream ls(line);
    std::string tag, name, dtype;
    int64_t rank = -1;
    ls >> tag >> name >> dtype >> rank;
    Shape shape(static_cast<size_t>(std::max<int64_t>(rank, 0)));
    for (auto& d : shape) ls >> d;
    if (tag != "tensor" || name != p.name || dtype != "f64" || !ls || shape != p.value.shape()) {
      throw std::invalid_argument("checkpoint: expected tensor " + p.name + " " +
                                  shape_str(p.value.shape()) + ", found '" + line + "'");
    }
    auto d = p.value.mutable_data();
    in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!in) throw std::invalid_argument("checkpoint: truncated data for " + p.name);
  }
  return model;
}

void CompressionModel::copy_params_from(const CompressionModel& other) {
  if (other.params_.size() != params_.size()) {
    throw std::invalid_argument("copy_params_from: models have different parameter sets");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw std::invalid_argument("copy_params_from: mismatch at " + dst.name);
    }
    const auto s = src.value.data();
    std::copy(s.begin(), s.end(), dst.value.mutable_data().begin());
  }
}

std::vector<std::vector<double>> snapshot(const ParamList& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.value.data().begin(), p.value.data().end());
  return out;
}

}  // namespace tfc
