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

#include <algorithm>
#include <cmath>

#include "tfc/entropy_model.hpp"
#include "tfc/entropy_transformer.hpp"
#include "tfc/ops.hpp"
#include "tfc/random.hpp"

namespace tfc {
namespace {

EntropyConfig small_config() {
  EntropyConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.hyper_depth = 1;
  c.context_depth = 2;
  c.latent_channels = 4;
  c.hyper_channels = 2;
  c.topk = 6;
  c.rpe_h = 2;
  return c;
}

// Default init is close to zero everywhere; widen it so perturbations show.
void randomize(EntropyTransformer& et, Rng& rng, double scale = 0.3) {
  ParamList params;
  et.collect("et", params);
  for (auto& p : params)
    for (double& v : p.value.mutable_data()) v += scale * rng.normal();
}

struct Harness {
  EntropyTransformer et;
  PositionGrid grid;
  Tensor hyper;

  Harness(const EntropyConfig& cfg, int64_t h, int64_t w, uint64_t seed) : grid(h, w) {
    Rng rng(seed);
    et = EntropyTransformer(cfg, rng);
    randomize(et, rng);
    if (cfg.use_hyper) {
      const Tensor zhat = round_values(randn({1, cfg.hyper_channels, h / 4, w / 4}, rng, 2.0));
      hyper = et.hyper_decode(zhat, h, w);
    }
  }

  GaussianParams params(const Tensor& yhat_tokens, const ContextPlan& plan) const {
    const Tensor ctx = et.context_features(yhat_tokens, hyper, plan, grid);
    const Tensor hq = hyper.defined() ? index_select(hyper, 1, plan.queries) : Tensor();
    return et.predict_params(hq, ctx);
  }
};

bool rows_equal(const GaussianParams& a, int64_t ra, const GaussianParams& b, int64_t rb, int64_t C) {
  for (int64_t c = 0; c < C; ++c) {
    if (a.mu.at({0, ra, c}) != b.mu.at({0, rb, c})) return false;
    if (a.sigma.at({0, ra, c}) != b.sigma.at({0, rb, c})) return false;
  }
  return true;
}

Tensor latent_tokens(int64_t n, int64_t C, Rng& rng) { return round_values(randn({1, n, C}, rng, 3.0)); }

Tensor perturbed(const Tensor& t, int64_t pos, int64_t C) {
  Tensor out = t.detach();
  for (int64_t c = 0; c < C; ++c) out.mutable_data()[pos * C + c] += 5.0;
  return out;
}

TEST(EntropyConfig, Validation) {
  EntropyConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.heads = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.context_depth = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.use_hyper = c.use_context = false;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Plans, CheckerboardSlices) {
  const PositionGrid g(3, 4);
  const auto s1 = slice_positions(g, 1), s2 = slice_positions(g, 2);
  EXPECT_EQ(s1.size() + s2.size(), 12u);
  for (int64_t p : s1) EXPECT_EQ((g.row(p) + g.col(p)) % 2, 0);
  for (int64_t p : s2) EXPECT_EQ((g.row(p) + g.col(p)) % 2, 1);
  EXPECT_TRUE(in_first_slice(0, 0));
  EXPECT_FALSE(in_first_slice(0, 1));
}

TEST(Plans, BidirectionalTwoByTwoSeesBothFirstSliceKeys) {
  const ContextPlan p = pass2_plan(PositionGrid(2, 2), true);
  EXPECT_EQ(p.queries, (std::vector<int64_t>{1, 2}));
  EXPECT_EQ(p.keys, (std::vector<int64_t>{0, 3}));
  EXPECT_TRUE(p.mask.empty());
  const ContextPlan u = pass2_plan(PositionGrid(2, 2), false);
  // Start token plus keys earlier in raster order: query 1 sees {0}, query 2 sees {0}.
  EXPECT_EQ(u.mask.keep, (std::vector<uint8_t>{1, 1, 0, 1, 1, 0}));
}

TEST(Plans, SerialMaskIsStrictlyLowerTriangular) {
  const ContextPlan p = serial_plan(5);
  const int64_t cols = 6;
  for (int64_t q = 0; q < 5; ++q) {
    EXPECT_EQ(p.mask.keep[q * cols], 1);
    for (int64_t k = 0; k < 5; ++k) EXPECT_EQ(p.mask.keep[q * cols + 1 + k], k < q ? 1 : 0);
  }
  const ContextPlan s = serial_step_plan(3);
  EXPECT_EQ(s.queries, std::vector<int64_t>{3});
  EXPECT_EQ(s.keys, (std::vector<int64_t>{0, 1, 2}));
}

TEST(Plans, DropOffsetHidesExactlyOneKey) {
  const PositionGrid g(4, 4);
  const ContextPlan p = drop_offset_plan(g, {-1, 1});
  const ContextPlan base = serial_plan(16);
  for (int64_t q = 0; q < 16; ++q) {
    int64_t diff = 0;
    for (int64_t k = 0; k < 17; ++k) diff += p.mask.keep[q * 17 + k] != base.mask.keep[q * 17 + k];
    const bool inside = g.row(q) >= 1 && g.col(q) + 1 < 4;
    EXPECT_EQ(diff, inside ? 1 : 0) << q;
  }
}

TEST(Tokens, ImageRoundTrip) {
  Rng rng(1);
  const Tensor x = randn({2, 3, 4, 5}, rng);
  const Tensor t = image_to_tokens(x);
  EXPECT_EQ(t.shape(), (Shape{2, 20, 3}));
  EXPECT_EQ(t.at({1, 7, 2}), x.at({1, 2, 1, 2}));
  const Tensor back = tokens_to_image(t, 4, 5);
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back.data()[i], x.data()[i]);
}

TEST(EntropyTransformer, EmbeddingOfZerosIsBiasRows) {
  Rng rng(2);
  EntropyTransformer et(small_config(), rng);
  randomize(et, rng);
  const Tensor e = et.embed_latents(Tensor::zeros({1, 3, 4}));
  EXPECT_EQ(e.shape(), (Shape{1, 3, 16}));
  for (int64_t c = 0; c < 16; ++c) {
    EXPECT_EQ(e.at({0, 0, c}), e.at({0, 1, c}));
    EXPECT_EQ(e.at({0, 0, c}), e.at({0, 2, c}));
  }
  EXPECT_EQ(et.embed_latents(Tensor::zeros({1, 1, 4})).shape(), (Shape{1, 1, 16}));
}

TEST(EntropyTransformer, HyperShapes) {
  Rng rng(3);
  EntropyTransformer et(small_config(), rng);
  const Tensor y = randn({2, 4, 8, 8}, rng);
  const Tensor z = et.hyper_encode(y);
  EXPECT_EQ(z.shape(), (Shape{2, 2, 2, 2}));
  const Tensor f = et.hyper_decode(round_values(z), 8, 8);
  EXPECT_EQ(f.shape(), (Shape{2, 64, 16}));
  EXPECT_EQ(et.hyper_encode(randn({1, 4, 4, 12}, rng)).shape(), (Shape{1, 2, 1, 3}));
  EXPECT_THROW(et.hyper_encode(randn({1, 4, 6, 8}, rng)), ShapeError);
  EXPECT_THROW(et.hyper_decode(round_values(z), 8, 12), ShapeError);
}

TEST(EntropyTransformer, HyperDecodeIsDeterministic) {
  Rng rng(4);
  EntropyTransformer et(small_config(), rng);
  randomize(et, rng);
  const Tensor z = round_values(randn({1, 2, 2, 2}, rng, 2.0));
  const Tensor a = et.hyper_decode(z, 8, 8), b = et.hyper_decode(z, 8, 8);
  for (int64_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
}

TEST(EntropyTransformer, ConstantInputGivesConstantHyperLatentsWithoutPositions) {
  EntropyConfig cfg = small_config();
  cfg.pe = PeMode::none;
  Rng rng(5);
  EntropyTransformer et(cfg, rng);
  randomize(et, rng);
  Tensor y = Tensor::zeros({1, 4, 8, 8});
  for (int64_t c = 0; c < 4; ++c)
    for (int64_t i = 0; i < 64; ++i) y.mutable_data()[c * 64 + i] = 0.7 * (c + 1);
  const Tensor z = et.hyper_encode(y);
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 0; i < 2; ++i)
      for (int64_t j = 0; j < 2; ++j) EXPECT_NEAR(z.at({0, c, i, j}), z.at({0, c, 0, 0}), 1e-12);
}

TEST(EntropyTransformer, SerialCausalityExhaustiveFourByFour) {
  const EntropyConfig cfg = small_config();
  Harness hz(cfg, 4, 4, 6);
  Rng rng(7);
  const int64_t n = 16, C = cfg.latent_channels;
  const Tensor y = latent_tokens(n, C, rng);
  const ContextPlan plan = serial_plan(n);
  const GaussianParams base = hz.params(y, plan);
  int64_t dependent = 0;
  for (int64_t j = 0; j < n; ++j) {
    const GaussianParams p = hz.params(perturbed(y, j, C), plan);
    for (int64_t i = 0; i < n; ++i) {
      if (i <= j) {
        EXPECT_TRUE(rows_equal(base, i, p, i, C)) << "i=" << i << " j=" << j;
      } else {
        dependent += !rows_equal(base, i, p, i, C);
      }
    }
  }
  // The context must actually be used. Top-k drops some keys, so not every
  // (i > j) pair reacts.
  EXPECT_GT(dependent, n * (n - 1) / 4);
}

TEST(EntropyTransformer, TwoTokenSerialFirstRowSeesOnlyStartToken) {
  EntropyConfig cfg = small_config();
  cfg.use_hyper = false;
  Harness hz(cfg, 1, 2, 8);
  Rng rng(9);
  const Tensor y = latent_tokens(2, 4, rng);
  const ContextPlan plan = serial_plan(2);
  const GaussianParams a = hz.params(y, plan);
  const GaussianParams b = hz.params(perturbed(perturbed(y, 0, 4), 1, 4), plan);
  EXPECT_TRUE(rows_equal(a, 0, b, 0, 4));
  EXPECT_FALSE(rows_equal(a, 1, b, 1, 4));
}

TEST(EntropyTransformer, PassTwoIndependentOfOtherSliceTwoValues) {
  const EntropyConfig cfg = small_config();
  for (bool bidir : {true, false}) {
    Harness hz(cfg, 4, 8, 10);
    Rng rng(11);
    const int64_t C = cfg.latent_channels;
    const Tensor y = latent_tokens(32, C, rng);
    const ContextPlan plan = pass2_plan(hz.grid, bidir);
    const GaussianParams base = hz.params(y, plan);
    for (int64_t j : plan.queries) {
      const GaussianParams p = hz.params(perturbed(y, j, C), plan);
      for (size_t q = 0; q < plan.queries.size(); ++q) {
        EXPECT_TRUE(rows_equal(base, static_cast<int64_t>(q), p, static_cast<int64_t>(q), C));
      }
    }
    // Slice-1 values do matter.
    const GaussianParams p = hz.params(perturbed(y, plan.keys[0], C), plan);
    bool changed = false;
    for (size_t q = 0; q < plan.queries.size(); ++q) {
      changed |= !rows_equal(base, static_cast<int64_t>(q), p, static_cast<int64_t>(q), C);
    }
    EXPECT_TRUE(changed);
  }
}

TEST(EntropyTransformer, SerialStepMatchesTeacherForcedRowBitwise) {
  const EntropyConfig cfg = small_config();
  Harness hz(cfg, 4, 4, 12);
  Rng rng(13);
  const Tensor y = latent_tokens(16, 4, rng);
  for (Precision prec : {Precision::f64, Precision::f32}) {
    PrecisionScope scope(prec);
    NoGradGuard ng;
    const GaussianParams full = hz.params(y, serial_plan(16));
    for (int64_t p = 0; p < 16; ++p) {
      const GaussianParams step = hz.params(y, serial_step_plan(p));
      EXPECT_TRUE(rows_equal(full, p, step, 0, 4)) << "position " << p;
    }
  }
}

TEST(EntropyTransformer, PredictParamsContract) {
  Rng rng(14);
  for (int64_t C : {int64_t{4}, int64_t{192}, int64_t{384}}) {
    EntropyConfig cfg = small_config();
    cfg.latent_channels = C;
    EntropyTransformer et(cfg, rng);
    randomize(et, rng, 0.5);
    const GaussianParams p = et.predict_params(et.zero_features(2, 5), et.zero_features(2, 5));
    EXPECT_EQ(p.mu.shape(), (Shape{2, 5, C}));
    EXPECT_EQ(p.sigma.shape(), (Shape{2, 5, C}));
    for (int64_t c = 0; c < C; ++c) EXPECT_EQ(p.mu.at({0, 0, c}), p.mu.at({1, 4, c}));
  }
  EntropyTransformer et(small_config(), rng);
  randomize(et, rng, 3.0);
  const GaussianParams p = et.predict_params(randn({1, 50, 16}, rng, 10.0), randn({1, 50, 16}, rng, 10.0));
  for (double s : p.sigma.data()) EXPECT_GE(s, kSigmaFloor);
  EXPECT_THROW(et.predict_params(et.zero_features(1, 3), et.zero_features(1, 4)), ShapeError);
}

TEST(EntropyTransformer, PredictCallsCounted) {
  Rng rng(15);
  EntropyTransformer et(small_config(), rng);
  et.reset_predict_calls();
  et.predict_params(et.zero_features(1, 2), et.zero_features(1, 2));
  et.predict_params(et.zero_features(1, 2), Tensor());
  EXPECT_EQ(et.predict_calls(), 2);
}

TEST(EntropyTransformer, CorruptedKeysGetZeroAttention) {
  EntropyConfig cfg = small_config();
  cfg.topk = 0;
  Harness hz(cfg, 4, 4, 16);
  Rng rng(17);
  std::vector<uint8_t> corrupted(32);
  for (auto& c : corrupted) c = rng.bernoulli(0.5);
  const ContextPlan plan = random_mask_plan(16, 2, corrupted);
  Tensor hyper2 = concat({hz.hyper, hz.hyper}, 0);
  AttentionTrace trace;
  const Tensor y = round_values(randn({2, 16, 4}, rng, 3.0));
  hz.et.context_features(y, hyper2, plan, hz.grid, &trace);
  ASSERT_FALSE(trace.weights.empty());
  for (const Tensor& w : trace.weights) {
    const int64_t H = w.dim(0);
    for (int64_t h = 0; h < H; ++h)
      for (int64_t b = 0; b < 2; ++b)
        for (int64_t q = 0; q < 16; ++q)
          for (int64_t k = 0; k < 16; ++k) {
            if (corrupted[b * 16 + k] || k >= q) EXPECT_EQ(w.at({h, b, q, 1 + k}), 0.0);
          }
  }
}

TEST(EntropyTransformer, HyperpriorPathIgnoresLatents) {
  // Only zhat enters hyper_decode; predictions without context depend on the
  // hyper features alone.
  EntropyConfig cfg = small_config();
  cfg.use_context = false;
  Harness hz(cfg, 4, 4, 18);
  const GaussianParams a = hz.et.predict_params(hz.hyper, Tensor());
  const GaussianParams b = hz.et.predict_params(hz.hyper, Tensor());
  for (int64_t i = 0; i < a.mu.numel(); ++i) ASSERT_EQ(a.mu.data()[i], b.mu.data()[i]);
}

TEST(EntropyTransformer, ParametersFiniteAtInit) {
  Rng rng(19);
  EntropyTransformer et(EntropyConfig{}, rng);
  ParamList params;
  et.collect("et", params);
  EXPECT_GT(params.size(), 10u);
  for (auto& p : params)
    for (double v : p.value.data()) ASSERT_TRUE(std::isfinite(v)) << p.name;
}

}  // namespace
}  // namespace tfc
