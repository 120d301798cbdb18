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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>

#include "tfc/ops.hpp"
#include "tfc/trainer.hpp"
#include "test_models.hpp"

namespace tfc {
namespace {

TEST(LrSchedule, Endpoints) {
  TrainConfig c;
  const int64_t total = 2000;
  EXPECT_EQ(lr_schedule(0, total, c), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(100, total, c), 1e-4);
  EXPECT_DOUBLE_EQ(lr_schedule(50, total, c), 0.5e-4);
  EXPECT_NEAR(lr_schedule(total, total, c), 1e-4 * std::pow(0.75, 4), 1e-18);
  EXPECT_NEAR(lr_schedule(total, total, c), 3.164e-5, 1e-8);
  EXPECT_THROW(lr_schedule(total + 1, total, c), std::invalid_argument);
}

TEST(LrSchedule, StepwiseDecayBuckets) {
  TrainConfig c;
  const int64_t total = 2000;
  // After warmup (100 steps) each fifth of the remaining 1900 steps is a bucket.
  for (int64_t s = 101; s < total; ++s) {
    const int64_t bucket = static_cast<int64_t>(std::floor(5.0 * (s - 100) / 1900.0));
    EXPECT_NEAR(lr_schedule(s, total, c), 1e-4 * std::pow(0.75, std::min<int64_t>(bucket, 4)), 1e-18) << s;
  }
  for (int64_t s = 1; s <= total; ++s) ASSERT_GE(lr_schedule(s, total, c), 0.0);
}

TEST(TrainConfig, DefaultsAndKeyValues) {
  TrainConfig c;
  EXPECT_EQ(c.base_lr, 1e-4);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.adam_eps, 1e-8);
  EXPECT_EQ(c.warmup_fraction, 0.05);
  EXPECT_EQ(c.decay, 0.75);
  EXPECT_EQ(c.clip, 1.0);
  EXPECT_EQ(c.mask_ratio, 0.5);
  c.steps = 77;
  c.lambda = 0.003;
  const TrainConfig r = TrainConfig::from_kv(c.to_kv());
  EXPECT_EQ(r.steps, 77);
  EXPECT_EQ(r.lambda, 0.003);
  c.warmup_fraction = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Adam, MatchesHandComputedUpdates) {
  Tensor w = Tensor::from_data({2}, {1.0, -2.0});
  ParamList params;
  register_param(params, "w", w);
  Adam opt(params, 0.9, 0.999, 1e-8);
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
  for (int t = 1; t <= 5; ++t) {
    opt.zero_grad();
    backward(sum(mul(square(w), Tensor::from_data({2}, {3.0, 0.5}))));
    opt.step(0.1);
    const double k[2] = {3.0, 0.5};
    for (int i = 0; i < 2; ++i) {
      const double g = 2 * k[i] * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(w.data()[i], ref[i], 1e-14);
    }
  }
  EXPECT_EQ(opt.steps(), 5);
}

TEST(Clip, HugeGradientClippedToUnitNorm) {
  Tensor a = Tensor::zeros({3}), b = Tensor::zeros({2, 2});
  ParamList params;
  register_param(params, "a", a);
  register_param(params, "b", b);
  backward(add(sum(mul_scalar(a, 1e8)), sum(mul_scalar(b, -3e7))));
  const double before = clip_grad_norm(params, 1.0);
  EXPECT_NEAR(before, std::sqrt(3 * 1e16 + 4 * 9e14), 1.0);
  EXPECT_NEAR(grad_norm(params), 1.0, 1e-12);
  // Below the threshold nothing changes.
  EXPECT_NEAR(clip_grad_norm(params, 5.0), 1.0, 1e-12);
  EXPECT_NEAR(grad_norm(params), 1.0, 1e-12);
}

TEST(TrainStep, ZeroLambdaLeavesDecoderGradientsAtZero) {
  CompressionModel m(testing::tiny_model(), 1);
  Adam opt(m.params());
  Rng rng(2);
  const Tensor x = rand_uniform({1, 3, 64, 64}, rng, 0, 1);
  StepSpec spec = step_spec_for(m, TrainConfig{}, false);
  spec.lambda = 0.0;
  const StepResult r = train_step(m, opt, x, spec, 1e-4, 1.0, rng, 0);
  EXPECT_NEAR(r.loss.total.item(), r.loss.rate_latents + r.loss.rate_hyper, 1e-12);
  int64_t checked = 0;
  for (const auto& p : m.params()) {
    const bool decoder = p.name.find("ae.dec") == 0 || p.name.find("ae.igdn") == 0 || p.name.find("ae.rgb") == 0;
    if (!decoder) continue;
    ++checked;
    if (!p.value.has_grad()) continue;
    for (double g : p.value.grad()) ASSERT_EQ(g, 0.0) << p.name;
  }
  EXPECT_GT(checked, 0);
}

TEST(TrainStep, LossFallsOnAFixedBatch) {
  CompressionModel m(testing::tiny_model(), 3);
  Adam opt(m.params());
  Rng rng(4);
  const Tensor x = stack_batch(synthetic_set(2, 64, 64, 5));
  const StepSpec spec = step_spec_for(m, TrainConfig{}, false);
  double first = 0, last = 0;
  const int steps = 120;
  for (int s = 0; s < steps; ++s) {
    const double loss = train_step(m, opt, x, spec, 2e-3, 1.0, rng, s).loss.total.item();
    if (s < 10) first += loss;
    if (s >= steps - 10) last += loss;
  }
  EXPECT_LT(last, first);
}

TEST(Train, SameSeedReproducesWeights) {
  TrainConfig c;
  c.steps = 3;
  c.batch = 1;
  c.patch = 64;
  c.seed = 9;
  CompressionModel a(testing::tiny_model(), 5), b(testing::tiny_model(), 5);
  train(a, Corpus::synthetic(), c, false);
  train(b, Corpus::synthetic(), c, false);
  EXPECT_EQ(snapshot(a.params()), snapshot(b.params()));
  EXPECT_NE(a.hash(), CompressionModel(testing::tiny_model(), 5).hash());
}

TEST(Train, NonFiniteLossNamesTermAndStep) {
  CompressionModel m(testing::tiny_model(), 6);
  Adam opt(m.params());
  Rng rng(7);
  for (auto& p : m.params()) {
    if (p.name.find("ae.rgb") == 0) p.value.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  }
  const Tensor x = rand_uniform({1, 3, 64, 64}, rng, 0, 1);
  try {
    train_step(m, opt, x, step_spec_for(m, TrainConfig{}, false), 1e-4, 1.0, rng, 17);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("distortion"), std::string::npos) << msg;
    EXPECT_NE(msg.find("step 17"), std::string::npos) << msg;
  }
}

TEST(Train, PretrainSpecUsesRandomMasks) {
  const CompressionModel m(testing::tiny_model(), 8);
  TrainConfig c;
  c.mask_ratio = 0.3;
  const StepSpec p = step_spec_for(m, c, true);
  EXPECT_EQ(p.regime, ContextRegime::random_mask);
  EXPECT_EQ(p.mask_ratio, 0.3);
  EXPECT_EQ(p.lambda, c.lambda);
  EXPECT_EQ(step_spec_for(m, c, false).regime, ContextRegime::serial);
  ModelConfig par = testing::tiny_model();
  par.mode = CodecMode::parallel;
  EXPECT_EQ(step_spec_for(CompressionModel(par, 8), c, false).regime, ContextRegime::parallel);
}

TEST(TrainEntropy, TransformsUntouched) {
  CompressionModel m(testing::tiny_model(), 9);
  const auto before = snapshot(m.params());
  Rng rng(10);
  const Tensor latents = randn({6, 4, 4, 4}, rng, 2.0);
  TrainConfig c;
  c.steps = 3;
  c.batch = 2;
  train_entropy(m, latents, c, step_spec_for(m, c, false));
  const auto after = snapshot(m.params());
  bool entropy_changed = false;
  for (size_t i = 0; i < before.size(); ++i) {
    if (m.params()[i].name.rfind("ae.", 0) == 0) {
      EXPECT_EQ(before[i], after[i]) << m.params()[i].name;
    } else {
      entropy_changed |= before[i] != after[i];
    }
  }
  EXPECT_TRUE(entropy_changed);
}

TEST(LambdaSweep, OnePointPerLambda) {
  TrainConfig c;
  c.steps = 2;
  c.batch = 1;
  const auto held = synthetic_set(1, 64, 64, 11);
  const auto pts = lambda_sweep(Corpus::synthetic(), {0.01}, testing::tiny_model(), c, held);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].lambda, 0.01);
  EXPECT_GT(pts[0].bpp, 0.0);
  EXPECT_GT(pts[0].psnr, 0.0);
}

}  // namespace
}  // namespace tfc
