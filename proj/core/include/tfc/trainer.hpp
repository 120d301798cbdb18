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

// Optimization: Adam with warmup and step decay, global-norm clipping,
// mask pretraining and lambda sweeps.

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfc/config_file.hpp"
#include "tfc/corpus.hpp"
#include "tfc/entropy_model.hpp"
#include "tfc/model.hpp"

namespace tfc {

struct TrainConfig {
  double lambda = 0.02;
  int64_t steps = 2000;
  int64_t batch = 8;
  int64_t patch = 64;
  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double warmup_fraction = 0.05;
  double decay = 0.75;
  int64_t decay_buckets = 5;
  double clip = 1.0;
  double mask_ratio = 0.5;
  uint64_t seed = 0;

  void validate() const;
  KeyValues to_kv() const;
  static TrainConfig from_kv(const KeyValues& kv);  // missing keys keep defaults
};

/// Linear ramp from 0 to base_lr over the warmup steps, then
/// base_lr * decay^floor(buckets * (step - warmup) / (total - warmup)),
/// with the final step kept in the last bucket.
double lr_schedule(int64_t step, int64_t total_steps, const TrainConfig& cfg);

class Adam {
 public:
  Adam(ParamList params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  /// Applies one update from the current grads; tensors without a grad are
  /// left alone.
  void step(double lr);
  void zero_grad();
  int64_t steps() const { return t_; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Scales all grads so their joint L2 norm is at most max_norm. Returns the
/// norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);
double grad_norm(const ParamList& params);

/// Raised when a loss term, gradient or parameter stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What a training step optimizes.
struct StepSpec {
  ContextRegime regime = ContextRegime::serial;
  bool bidirectional = true;
  double mask_ratio = 0.5;
  double lambda = 0.02;
};
StepSpec step_spec_for(const CompressionModel& model, const TrainConfig& cfg, bool pretrain);

struct StepResult {
  int64_t step = 0;
  double lr = 0.0;
  double grad_norm = 0.0;  // before clipping
  RdLoss loss;
};

/// One full step on images x [B, 3, p, p]: forward with noise quantization,
/// both rates and distortion, backward, clipping, Adam.
StepResult train_step(CompressionModel& model, Adam& opt, const Tensor& x, const StepSpec& spec,
                      double lr, double clip, Rng& rng, int64_t step);
/// Rate-only step on fixed latents y [B, C, h, w]; the transforms are not
/// touched. pixel_count is the number of image pixels the latents stand for.
StepResult train_entropy_step(CompressionModel& model, Adam& opt, const Tensor& y,
                              const StepSpec& spec, double lr, double clip, Rng& rng, int64_t step);

using StepCallback = std::function<void(const StepResult&)>;

/// Runs cfg.steps steps on corpus batches.
std::vector<StepResult> train(CompressionModel& model, const Corpus& corpus, const TrainConfig& cfg,
                              bool pretrain, const StepCallback& on_step = {});
/// Random-mask training: a cfg.mask_ratio share of latents is zeroed at the
/// context input and hidden as keys; those positions get hyperprior-only
/// predictions.
std::vector<StepResult> mask_pretrain(CompressionModel& model, const Corpus& corpus,
                                      const TrainConfig& cfg, const StepCallback& on_step = {});
/// Entropy model only, on a fixed latent set [N, C, h, w] sampled in
/// batches of cfg.batch.
std::vector<StepResult> train_entropy(CompressionModel& model, const Tensor& latents,
                                      const TrainConfig& cfg, const StepSpec& spec,
                                      const StepCallback& on_step = {});

struct RdPoint {
  double lambda = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
};

/// Trains one model per lambda from the same seed and reports the mean
/// coded bpp and PSNR over the held-out images.
std::vector<RdPoint> lambda_sweep(const Corpus& corpus, const std::vector<double>& lambdas,
                                  const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                  const std::vector<Tensor>& heldout,
                                  std::vector<CompressionModel>* models = nullptr);

}  // namespace tfc
