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

#include "tfc/trainer.hpp"

#include <cmath>
#include <sstream>

#include "tfc/image.hpp"
#include "tfc/ops.hpp"
#include "tfc/pipeline.hpp"

namespace tfc {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (!(lambda >= 0)) fail("lambda must be >= 0");
  if (steps < 1 || batch < 1 || patch < 16 || patch % 16) fail("steps, batch must be positive and patch a multiple of 16");
  if (!(base_lr > 0)) fail("base_lr must be positive");
  if (!(warmup_fraction > 0 && warmup_fraction < 1)) fail("warmup_fraction must be in (0, 1)");
  if (!(decay > 0 && decay <= 1) || decay_buckets < 1) fail("bad decay settings");
  if (!(clip > 0)) fail("clip must be positive");
  if (!(mask_ratio >= 0 && mask_ratio <= 1)) fail("mask_ratio must be in [0, 1]");
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv.set("lambda", lambda);
  kv.set("steps", steps);
  kv.set("batch", batch);
  kv.set("patch", patch);
  kv.set("base_lr", base_lr);
  kv.set("beta1", beta1);
  kv.set("beta2", beta2);
  kv.set("adam_eps", adam_eps);
  kv.set("warmup_fraction", warmup_fraction);
  kv.set("decay", decay);
  kv.set("decay_buckets", decay_buckets);
  kv.set("clip", clip);
  kv.set("mask_ratio", mask_ratio);
  kv.set("seed", static_cast<int64_t>(seed));
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  c.lambda = kv.get_double("lambda", c.lambda);
  c.steps = kv.get_int("steps", c.steps);
  c.batch = kv.get_int("batch", c.batch);
  c.patch = kv.get_int("patch", c.patch);
  c.base_lr = kv.get_double("base_lr", c.base_lr);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.adam_eps = kv.get_double("adam_eps", c.adam_eps);
  c.warmup_fraction = kv.get_double("warmup_fraction", c.warmup_fraction);
  c.decay = kv.get_double("decay", c.decay);
  c.decay_buckets = kv.get_int("decay_buckets", c.decay_buckets);
  c.clip = kv.get_double("clip", c.clip);
  c.mask_ratio = kv.get_double("mask_ratio", c.mask_ratio);
  c.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<int64_t>(c.seed)));
  c.validate();
  return c;
}

double lr_schedule(int64_t step, int64_t total_steps, const TrainConfig& cfg) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    throw std::invalid_argument("lr_schedule: step " + std::to_string(step) + " outside [0, " +
                                std::to_string(total_steps) + "]");
  }
  const double warmup = cfg.warmup_fraction * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s <= warmup) return cfg.base_lr * s / warmup;
  const double frac = (s - warmup) / (static_cast<double>(total_steps) - warmup);
  const int64_t bucket = std::min<int64_t>(cfg.decay_buckets - 1,
                                           static_cast<int64_t>(std::floor(cfg.decay_buckets * frac)));
  return cfg.base_lr * std::pow(cfg.decay, static_cast<double>(bucket));
}

Adam::Adam(ParamList params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<size_t>(p.value.numel()), 0.0);
    v_.emplace_back(static_cast<size_t>(p.value.numel()), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].value;
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

double grad_norm(const ParamList& params) {
  double s = 0.0;
  for (const auto& p : params) {
    if (!p.value.has_grad()) continue;
    for (double g : p.value.grad()) s += g * g;
  }
  return std::sqrt(s);
}

double clip_grad_norm(const ParamList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      if (!p.value.has_grad()) continue;
      Tensor t = p.value;
      for (double& g : t.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

StepSpec step_spec_for(const CompressionModel& model, const TrainConfig& cfg, bool pretrain) {
  StepSpec s;
  s.lambda = cfg.lambda;
  s.mask_ratio = cfg.mask_ratio;
  s.bidirectional = model.config().bidirectional;
  if (pretrain) {
    s.regime = ContextRegime::random_mask;
  } else {
    s.regime = model.config().mode == CodecMode::serial ? ContextRegime::serial : ContextRegime::parallel;
  }
  return s;
}

namespace {

void check_finite(const char* what, double v, int64_t step) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite " << what << " (" << v << ") at step " << step;
    throw NonFiniteError(os.str());
  }
}

StepResult finish_step(Adam& opt, RdLoss loss, double lr, double clip, int64_t step) {
  check_finite("latent rate", loss.rate_latents, step);
  check_finite("hyper rate", loss.rate_hyper, step);
  check_finite("distortion", loss.distortion, step);
  check_finite("loss", loss.total.item(), step);
  opt.zero_grad();
  backward(loss.total);
  for (const auto& p : opt.params()) {
    if (!p.value.has_grad()) continue;
    for (double g : p.value.grad()) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient in " + p.name + " at step " + std::to_string(step));
    }
  }
  StepResult r;
  r.step = step;
  r.lr = lr;
  r.grad_norm = clip_grad_norm(opt.params(), clip);
  opt.step(lr);
  for (const auto& p : opt.params()) {
    for (double w : p.value.data()) {
      if (!std::isfinite(w)) throw NonFiniteError("non-finite parameter " + p.name + " after step " + std::to_string(step));
    }
  }
  loss.total = loss.total.detach();
  r.loss = std::move(loss);
  return r;
}

EntropyOptions training_options(const StepSpec& spec) {
  EntropyOptions o;
  o.regime = spec.regime;
  o.bidirectional = spec.bidirectional;
  o.training = true;
  o.mask_ratio = spec.mask_ratio;
  return o;
}

}  // namespace

StepResult train_step(CompressionModel& model, Adam& opt, const Tensor& x, const StepSpec& spec,
                      double lr, double clip, Rng& rng, int64_t step) {
  if (x.rank() != 4 || x.dim(1) != 3) throw ShapeError("train_step: expected [B, 3, H, W], got " + shape_str(x.shape()));
  PrecisionScope f64(Precision::f64);
  const auto& ae = model.autoencoder();
  const Tensor y = ae.encode(x);
  const EntropyForward ent = model.entropy_forward(y, training_options(spec), &rng);
  const Tensor x_hat = ae.decode(round_straight_through(y), false);
  const double pixels = static_cast<double>(x.dim(0) * x.dim(2) * x.dim(3));
  return finish_step(opt, rd_loss(x, x_hat, ent.latent_probs, ent.hyper_probs, spec.lambda, pixels), lr,
                     clip, step);
}

StepResult train_entropy_step(CompressionModel& model, Adam& opt, const Tensor& y,
                              const StepSpec& spec, double lr, double clip, Rng& rng, int64_t step) {
  PrecisionScope f64(Precision::f64);
  const EntropyForward ent = model.entropy_forward(y, training_options(spec), &rng);
  const double pixels = static_cast<double>(y.dim(0) * 16 * y.dim(2) * 16 * y.dim(3));
  return finish_step(opt, rd_loss(Tensor(), Tensor(), ent.latent_probs, ent.hyper_probs, spec.lambda, pixels),
                     lr, clip, step);
}

std::vector<StepResult> train(CompressionModel& model, const Corpus& corpus, const TrainConfig& cfg,
                              bool pretrain, const StepCallback& on_step) {
  cfg.validate();
  Rng rng(cfg.seed ^ 0x7472616eULL);
  Adam opt(model.params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  const StepSpec spec = step_spec_for(model, cfg, pretrain);
  std::vector<StepResult> log;
  for (int64_t s = 0; s < cfg.steps; ++s) {
    const Tensor x = corpus.batch(cfg.batch, cfg.patch, rng);
    log.push_back(train_step(model, opt, x, spec, lr_schedule(s, cfg.steps, cfg), cfg.clip, rng, s));
    if (on_step) on_step(log.back());
  }
  return log;
}

std::vector<StepResult> mask_pretrain(CompressionModel& model, const Corpus& corpus,
                                      const TrainConfig& cfg, const StepCallback& on_step) {
  return train(model, corpus, cfg, true, on_step);
}

std::vector<StepResult> train_entropy(CompressionModel& model, const Tensor& latents,
                                      const TrainConfig& cfg, const StepSpec& spec,
                                      const StepCallback& on_step) {
  if (latents.rank() != 4) throw ShapeError("train_entropy: latents must be [N, C, h, w]");
  Rng rng(cfg.seed ^ 0x656e7472ULL);
  Adam opt(model.entropy_params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  const int64_t n = latents.dim(0);
  std::vector<StepResult> log;
  for (int64_t s = 0; s < cfg.steps; ++s) {
    std::vector<int64_t> pick(static_cast<size_t>(std::min(cfg.batch, n)));
    for (auto& i : pick) i = rng.randint(n);
    const Tensor y = index_select(latents, 0, pick);
    log.push_back(train_entropy_step(model, opt, y, spec, lr_schedule(s, cfg.steps, cfg), cfg.clip, rng, s));
    if (on_step) on_step(log.back());
  }
  return log;
}

std::vector<RdPoint> lambda_sweep(const Corpus& corpus, const std::vector<double>& lambdas,
                                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                  const std::vector<Tensor>& heldout,
                                  std::vector<CompressionModel>* models) {
  if (lambdas.empty()) throw std::invalid_argument("lambda_sweep: no lambda values");
  if (heldout.empty()) throw std::invalid_argument("lambda_sweep: empty held-out set");
  std::vector<RdPoint> points;
  for (double lambda : lambdas) {
    ModelConfig mc = model_cfg;
    mc.lambda = lambda;
    TrainConfig tc = train_cfg;
    tc.lambda = lambda;
    CompressionModel model(mc, tc.seed);
    train(model, corpus, tc, false);
    RdPoint pt;
    pt.lambda = lambda;
    for (const auto& x : heldout) {
      const EncodeResult e = encode(model, x, default_codec_options(model));
      const DecodeResult d = decode(model, e.bytes);
      const Metrics m = eval_metrics(x, quantize_8bit(d.x_hat), e.bytes.size());
      pt.bpp += m.bpp / static_cast<double>(heldout.size());
      pt.psnr += m.psnr / static_cast<double>(heldout.size());
    }
    points.push_back(pt);
    if (models) models->push_back(model);
  }
  return points;
}

}  // namespace tfc
