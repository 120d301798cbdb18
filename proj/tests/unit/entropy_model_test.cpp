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

#include "tfc/entropy_model.hpp"
#include "tfc/grad_check.hpp"
#include "tfc/ops.hpp"
#include "tfc/random.hpp"
#include "tfc/trainer.hpp"

namespace tfc {
namespace {

// Independent standard normal CDF.
double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

TEST(Quantize, RoundsHalfAwayFromZero) {
  const Tensor r = quantize_round(Tensor::from_data({6}, {1.5, -1.5, 0.5, -0.5, 2.49, -2.51}));
  const std::vector<double> want{2, -2, 1, -1, 2, -3};
  for (size_t i = 0; i < want.size(); ++i) EXPECT_EQ(r.data()[i], want[i]);
  EXPECT_EQ(round_half_away(2.5), 3.0);
  EXPECT_EQ(round_half_away(-2.5), -3.0);
}

TEST(Quantize, NoiseStaysWithinHalfAndIsCentred) {
  Rng rng(1);
  const int64_t n = 100000;
  const Tensor x = randn({n}, rng, 3.0);
  const Tensor q = quantize_noise(x, rng);
  for (int64_t i = 0; i < n; ++i) ASSERT_LE(std::abs(q.data()[i] - x.data()[i]), 0.5);
  const Tensor z = quantize_noise(Tensor::zeros({n}), rng);
  double m = 0;
  for (double v : z.data()) m += v;
  m /= n;
  EXPECT_LE(std::abs(m), 3.0 * 0.5 / std::sqrt(3.0 * n));
}

TEST(Quantize, StraightThroughPassesGradient) {
  Tensor y = Tensor::from_data({3}, {0.2, 1.7, -0.6});
  y.set_requires_grad(true);
  const Tensor r = round_straight_through(y);
  EXPECT_EQ(r.data()[1], 2.0);
  backward(sum(mul_scalar(r, 3.0)));
  for (double g : y.grad()) EXPECT_DOUBLE_EQ(g, 3.0);
}

TEST(GaussianLikelihood, CentralMassMatchesNormalOracle) {
  EXPECT_NEAR(gaussian_likelihood(0.0, 0.0, 1.0), phi(0.5) - phi(-0.5), 1e-12);
  EXPECT_NEAR(gaussian_likelihood(0.0, 0.0, 1.0), 0.382925, 1e-6);
}

TEST(GaussianLikelihood, DecreasesWithSigmaAtMean) {
  double prev = 2.0;
  for (double s = 0.1; s < 100; s *= 1.5) {
    const double p = gaussian_likelihood(0.0, 0.0, s);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(GaussianLikelihood, SymmetricAndTranslationInvariant) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    // Dyadic values keep mu +- t exact.
    const double mu = static_cast<double>(rng.randint(641) - 320) / 64.0;
    const double t = static_cast<double>(rng.randint(385)) / 64.0;
    const double sigma = rng.uniform(0.05, 8);
    EXPECT_EQ(gaussian_likelihood(mu + t, mu, sigma), gaussian_likelihood(mu - t, mu, sigma));
    const double m = static_cast<double>(rng.randint(21) - 10);
    const double y = std::round(rng.uniform(-10, 10));
    const double mu0 = std::round(mu);  // exact translation needs exactly representable sums
    EXPECT_EQ(gaussian_likelihood(y, mu0 + 0.25, sigma), gaussian_likelihood(y + m, mu0 + 0.25 + m, sigma));
  }
}

TEST(GaussianLikelihood, SumsToOneOverWideRange) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double mu = rng.uniform(-20, 20), sigma = std::exp(rng.uniform(std::log(1e-3), std::log(20.0)));
    double total = 0;
    for (double y = std::floor(mu - 40 * sigma - 1); y <= std::ceil(mu + 40 * sigma + 1); ++y) {
      total += gaussian_likelihood(y, mu, sigma, false);
    }
    EXPECT_NEAR(total, 1.0, 1e-6) << mu << " " << sigma;
  }
}

TEST(GaussianLikelihood, TensorFormMatchesScalarAndClamps) {
  const Tensor y = Tensor::from_data({3}, {0, 2, 50});
  const Tensor mu = Tensor::from_data({3}, {0.3, -1, 0});
  const Tensor s = Tensor::from_data({3}, {1, 0.7, 1});
  const Tensor p = gaussian_likelihood(y, mu, s);
  EXPECT_NEAR(p.data()[0], gaussian_likelihood(0, 0.3, 1), 1e-12);
  EXPECT_NEAR(p.data()[1], gaussian_likelihood(2, -1, 0.7), 1e-12);
  EXPECT_EQ(p.data()[2], kProbFloor);
  EXPECT_EQ(kProbFloor, std::ldexp(0.5, -16));
}

TEST(RateBits, TrivialValues) {
  EXPECT_DOUBLE_EQ(rate_bits(Tensor::full({7}, 0.5)).item(), 7.0);
  EXPECT_DOUBLE_EQ(rate_bits(Tensor::ones({4})).item(), 0.0);
  EXPECT_DOUBLE_EQ(rate_bits_value({0.25, 0.5}), 3.0);
}

TEST(RateBits, GradCheckThroughLikelihood) {
  Rng rng(4);
  // Kept away from the probability floor, whose gradient is not the
  // derivative of the clamped value.
  const Tensor y = rand_uniform({12}, rng, -2, 2);
  Tensor mu = randn({12}, rng, 0.5);
  Tensor sigma = rand_uniform({12}, rng, 0.8, 2.0);
  const auto report = grad_check_params(
      [&] { return rate_bits(gaussian_likelihood(y, mu, sigma)); }, {mu, sigma});
  EXPECT_LT(report.max_rel_error, 1e-4);
  Tensor yn = rand_uniform({12}, rng, -2, 2);
  EXPECT_LT(grad_check([&](const Tensor& v) { return rate_bits(gaussian_likelihood(v, mu, sigma)); }, yn),
            1e-4);
}

TEST(FactorizedDensity, UntrainedPmfSumsToOne) {
  Rng rng(5);
  FactorizedDensity fd(6, rng);
  for (int64_t c = 0; c < 6; ++c) {
    double total = 0;
    for (double p : fd.pmf(c, -30, 30)) total += p;
    EXPECT_NEAR(total, 1.0, 1e-4);
  }
}

TEST(FactorizedDensity, CdfMonotoneWithLimits) {
  Rng rng(6);
  FactorizedDensity fd(2, rng);
  // Perturb so the test does not only see the initial shape.
  ParamList params;
  fd.collect("fd", params);
  for (auto& p : params)
    for (double& v : p.value.mutable_data()) v += 0.3 * rng.normal();
  const int64_t n = 20001;
  std::vector<double> xs(static_cast<size_t>(2 * n));
  for (int64_t i = 0; i < n; ++i) xs[2 * i] = xs[2 * i + 1] = -10.0 + 1e-3 * static_cast<double>(i);
  const Tensor c = fd.cdf(Tensor::from_data({n, 2}, xs));
  for (int64_t i = 1; i < n; ++i)
    for (int64_t ch = 0; ch < 2; ++ch) ASSERT_LE(c.data()[(i - 1) * 2 + ch], c.data()[i * 2 + ch]);
  const Tensor ends = fd.cdf(Tensor::from_data({2, 2}, {-1e4, -1e4, 1e4, 1e4}));
  EXPECT_LT(ends.data()[0], 1e-6);
  EXPECT_GT(ends.data()[3], 1 - 1e-6);
}

TEST(FactorizedDensity, LikelihoodIsCdfDifference) {
  Rng rng(7);
  FactorizedDensity fd(3, rng);
  const Tensor z = Tensor::from_data({1, 3, 1, 2}, {0, 1, -2, 3, 4, -1});
  const Tensor p = fd.likelihood(z, false);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t j = 0; j < 2; ++j) {
      const double v = z.at({0, c, 0, j});
      std::vector<double> lo(3, 0.0), hi(3, 0.0);
      lo[c] = v - 0.5;
      hi[c] = v + 0.5;
      const double want = fd.cdf(Tensor::from_data({1, 3}, hi)).data()[c] -
                          fd.cdf(Tensor::from_data({1, 3}, lo)).data()[c];
      EXPECT_NEAR(p.at({0, c, 0, j}), want, 1e-12);
    }
}

TEST(FactorizedDensity, FitToGaussianPeaksAtZero) {
  Rng rng(8);
  FactorizedDensity fd(1, rng);
  ParamList params;
  fd.collect("fd", params);
  Adam opt(params);
  for (int step = 0; step < 300; ++step) {
    const Tensor z = quantize_noise(randn({256, 1, 1, 1}, rng, 2.0), rng);
    opt.zero_grad();
    backward(rate_bits(fd.likelihood(z)));
    opt.step(1e-2);
  }
  const auto pmf = fd.pmf(0, -10, 10);
  const auto best = std::max_element(pmf.begin(), pmf.end()) - pmf.begin();
  EXPECT_EQ(best - 10, 0);
}

TEST(RdLoss, ComponentsAndTotal) {
  Rng rng(9);
  const Tensor x = rand_uniform({1, 3, 4, 4}, rng, 0, 1);
  const Tensor py = rand_uniform({8}, rng, 0.1, 1);
  const Tensor pz = rand_uniform({2}, rng, 0.1, 1);
  const RdLoss same = rd_loss(x, x, py, pz, 0.02, 16);
  EXPECT_EQ(same.distortion, 0.0);
  EXPECT_NEAR(same.total.item(), same.rate_latents + same.rate_hyper, 1e-12);
  EXPECT_NEAR(same.rate_latents, rate_bits(py).item() / 16, 1e-12);

  const Tensor xh = add_scalar(x, 1.0 / 255.0);
  const RdLoss off = rd_loss(x, xh, py, pz, 0.5, 16);
  EXPECT_NEAR(off.distortion, 1.0, 1e-9);
  EXPECT_NEAR(off.total.item(), off.rate_latents + off.rate_hyper + 0.5, 1e-9);
  EXPECT_GE(off.rate_latents, 0);
  EXPECT_GE(off.rate_hyper, 0);

  const RdLoss zero = rd_loss(x, xh, py, pz, 0.0, 16);
  EXPECT_NEAR(zero.total.item(), zero.rate_latents + zero.rate_hyper, 1e-12);
  EXPECT_THROW(rd_loss(x, x, py, pz, 0.02, 0), std::invalid_argument);
}

}  // namespace
}  // namespace tfc
