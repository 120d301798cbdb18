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
#include <limits>
#include <numeric>

#include "tfc/attention.hpp"
#include "tfc/grad_check.hpp"
#include "tfc/ops.hpp"
#include "tfc/random.hpp"

namespace tfc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Explicit-loop multi-head attention over one batch entry, used as the
// reference for MultiHeadAttention::forward.
struct LoopAttention {
  const MultiHeadAttention& mha;
  const Linear& wq;
  const Linear& wk;
  const Linear& wv;
  const Linear& wo;

  static std::vector<double> project(const Linear& l, const std::vector<double>& x, int64_t n) {
    const int64_t in = l.in_features(), out = l.out_features();
    std::vector<double> y(static_cast<size_t>(n * out));
    for (int64_t i = 0; i < n; ++i)
      for (int64_t o = 0; o < out; ++o) {
        double s = l.bias.defined() ? l.bias.data()[o] : 0.0;
        for (int64_t c = 0; c < in; ++c) s += x[i * in + c] * l.weight.data()[c * out + o];
        y[i * out + o] = s;
      }
    return y;
  }

  std::vector<double> run(const std::vector<double>& xq, int64_t nq, const std::vector<double>& xkv,
                          int64_t nk, const std::vector<uint8_t>* keep, int64_t topk,
                          const std::vector<TokenPos>* qp, const std::vector<TokenPos>* kp) const {
    const int64_t d = mha.d_model(), H = mha.heads(), dk = mha.d_head();
    const auto q = project(wq, xq, nq), k = project(wk, xkv, nk), v = project(wv, xkv, nk);
    std::vector<double> merged(static_cast<size_t>(nq * d), 0.0);
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t i = 0; i < nq; ++i) {
        std::vector<double> logit(static_cast<size_t>(nk));
        for (int64_t j = 0; j < nk; ++j) {
          double s = 0;
          for (int64_t c = 0; c < dk; ++c) s += q[i * d + h * dk + c] * k[j * d + h * dk + c];
          if (mha.rpe().enabled()) {
            for (int t = 0; t < mha.rpe().num_tables(); ++t) {
              const int32_t row = mha.rpe().index((*qp)[i], (*kp)[j], t);
              const Tensor& table = mha.rpe_tables()[t];
              for (int64_t c = 0; c < dk; ++c) s += q[i * d + h * dk + c] * table.data()[row * dk + c];
            }
          }
          logit[j] = s / std::sqrt(static_cast<double>(dk));
          if (keep && !(*keep)[i * nk + j]) logit[j] = -kInf;
        }
        if (topk > 0 && topk < nk) {
          std::vector<int64_t> order(static_cast<size_t>(nk));
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) { return logit[a] > logit[b]; });
          for (size_t r = static_cast<size_t>(topk); r < order.size(); ++r) logit[order[r]] = -kInf;
        }
        const double mx = *std::max_element(logit.begin(), logit.end());
        double z = 0;
        for (double& l : logit) z += (l = std::exp(l - mx));
        for (int64_t c = 0; c < dk; ++c) {
          double s = 0;
          for (int64_t j = 0; j < nk; ++j) s += logit[j] / z * v[j * d + h * dk + c];
          merged[i * d + h * dk + c] = s;
        }
      }
    }
    return project(wo, merged, nq);
  }
};

std::vector<TokenPos> positions(int64_t h, int64_t w) { return grid_positions(PositionGrid(h, w)); }

// Default init gives near-uniform attention; spread the weights out.
void randomize(MultiHeadAttention& mha, Rng& rng) {
  ParamList params;
  mha.collect("attn", params);
  for (auto& p : params)
    for (double& v : p.value.mutable_data()) v = 0.5 * rng.normal();
}

double max_rel_diff(std::span<const double> a, const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return m;
}

TEST(TopkFilter, DocumentedExamples) {
  const Tensor a = topk_filter(Tensor::from_data({3}, {3, 1, 2}), 2);
  EXPECT_EQ(a.data()[0], 3);
  EXPECT_EQ(a.data()[1], -kInf);
  EXPECT_EQ(a.data()[2], 2);
  const Tensor t = topk_filter(Tensor::from_data({3}, {5, 5, 1}), 1);
  EXPECT_EQ(t.data()[0], 5);
  EXPECT_EQ(t.data()[1], -kInf);
  EXPECT_EQ(t.data()[2], -kInf);
  Rng rng(3);
  const Tensor r = randn({4, 6}, rng);
  const Tensor same = topk_filter(r, 6);
  for (size_t i = 0; i < 24; ++i) EXPECT_EQ(same.data()[i], r.data()[i]);
}

class AttentionOracle : public ::testing::TestWithParam<PeMode> {};

TEST_P(AttentionOracle, MatchesLoopReimplementation) {
  Rng rng(17);
  const int64_t d = 12, H = 3;
  MultiHeadAttention mha(d, H, RpeIndexer(GetParam(), 2), rng);
  randomize(mha, rng);
  LoopAttention oracle{mha, mha.wq(), mha.wk(), mha.wv(), mha.wo()};
  const auto pos = positions(2, 4);
  const Tensor x = randn({1, 8, d}, rng);
  AttendOptions opt;
  opt.query_pos = &pos;
  opt.key_pos = &pos;
  for (int64_t k : {int64_t{0}, int64_t{3}}) {
    opt.topk = k;
    const Tensor y = mha.forward(x, x, opt);
    const std::vector<double> xv(x.data().begin(), x.data().end());
    const auto want = oracle.run(xv, 8, xv, 8, nullptr, k, &pos, &pos);
    EXPECT_LT(max_rel_diff(y.data(), want), 1e-6) << "k=" << k;
  }
}

INSTANTIATE_TEST_SUITE_P(PeModes, AttentionOracle,
                         ::testing::Values(PeMode::none, PeMode::rpe_diamond, PeMode::rpe_2d,
                                           PeMode::rpe_1d1d));

TEST(Attention, LargeTopkEqualsDenseOverRandomCases) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    const int64_t H = 1 + rng.randint(3), dk = 2 + rng.randint(3), d = H * dk;
    const int64_t gh = 1 + rng.randint(3), gw = 1 + rng.randint(4), n = gh * gw;
    const PeMode pe = trial % 2 ? PeMode::rpe_diamond : PeMode::none;
    MultiHeadAttention mha(d, H, RpeIndexer(pe, 1 + rng.randint(3)), rng);
    randomize(mha, rng);
    const auto pos = positions(gh, gw);
    AttentionMask mask;
    if (trial % 3 != 0) {
      mask.shape = {n, n};
      mask.keep.resize(static_cast<size_t>(n * n));
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) mask.keep[i * n + j] = (j == 0 || rng.bernoulli(0.6)) ? 1 : 0;
    }
    const Tensor x = randn({2, n, d}, rng);
    AttendOptions dense;
    dense.mask = mask.empty() ? nullptr : &mask;
    dense.query_pos = &pos;
    dense.key_pos = &pos;
    AttendOptions sparse = dense;
    sparse.topk = n + rng.randint(3);
    const Tensor a = mha.forward(x, x, dense), b = mha.forward(x, x, sparse);
    for (int64_t i = 0; i < a.numel(); ++i) {
      EXPECT_NEAR(b.data()[i], a.data()[i], 1e-6 * std::max(1.0, std::abs(a.data()[i])));
    }
  }
}

TEST(Attention, SingleTokenReturnsProjectedValue) {
  Rng rng(2);
  MultiHeadAttention mha(4, 2, RpeIndexer(PeMode::none, 1), rng);
  const Tensor x = randn({1, 1, 4}, rng);
  const Tensor y = mha.forward(x, x, {});
  const Tensor want = mha.wo()(mha.wv()(x));
  for (int64_t i = 0; i < 4; ++i) EXPECT_NEAR(y.data()[i], want.data()[i], 1e-12);
}

TEST(Attention, IdenticalTokensGetEqualWeights) {
  Rng rng(4);
  const Tensor row = randn({1, 4}, rng);
  const Tensor q = reshape(concat({row, row}, 0), {1, 1, 2, 4});
  AttentionTrace trace;
  const Tensor w = attention_weights(q, q, Tensor(), nullptr, 0, false, &trace);
  for (double v : w.data()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Attention, TopOneSelectsArgmaxValueRow) {
  Rng rng(5);
  const Tensor q = randn({1, 1, 4, 3}, rng), k = randn({1, 1, 4, 3}, rng), v = randn({1, 1, 4, 3}, rng);
  const Tensor w = attention_weights(q, k, Tensor(), nullptr, 1, false);
  const Tensor out = matmul(w, v);
  for (int64_t i = 0; i < 4; ++i) {
    int64_t best = 0;
    double best_v = -kInf;
    for (int64_t j = 0; j < 4; ++j) {
      double s = 0;
      for (int64_t c = 0; c < 3; ++c) s += q.at({0, 0, i, c}) * k.at({0, 0, j, c});
      if (s > best_v) best_v = s, best = j;
    }
    for (int64_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at({0, 0, i, c}), v.at({0, 0, best, c}));
  }
}

TEST(Attention, FewerValidKeysThanKSoftmaxesOverValidOnly) {
  Rng rng(6);
  const Tensor q = randn({1, 1, 1, 4}, rng), k = randn({1, 1, 6, 4}, rng);
  AttentionMask mask{{1, 1, 0, 0, 0, 0}, {1, 6}};
  AttentionTrace trace;
  const Tensor w = attention_weights(q, k, Tensor(), &mask, 8, false, &trace);
  EXPECT_GT(w.data()[0], 0);
  EXPECT_GT(w.data()[1], 0);
  EXPECT_NEAR(w.data()[0] + w.data()[1], 1.0, 1e-12);
  for (int j = 2; j < 6; ++j) EXPECT_EQ(w.data()[j], 0.0);
  EXPECT_EQ(std::count(trace.survivors[0].begin(), trace.survivors[0].end(), 1), 2);
}

TEST(Attention, SurvivorsPerRowIsMinOfKAndValid) {
  Rng rng(7);
  const int64_t n = 9;
  const Tensor q = randn({2, 1, n, 4}, rng);
  AttentionMask causal;
  causal.shape = {n, n};
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) causal.keep.push_back(j <= i);
  AttentionTrace trace;
  const Tensor w = attention_weights(q, q, Tensor(), &causal, 4, false, &trace);
  for (int64_t h = 0; h < 2; ++h)
    for (int64_t i = 0; i < n; ++i) {
      int64_t alive = 0;
      double total = 0;
      for (int64_t j = 0; j < n; ++j) {
        alive += trace.survivors[0][(h * n + i) * n + j];
        total += w.at({h, 0, i, j});
      }
      EXPECT_EQ(alive, std::min<int64_t>(4, i + 1));
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Attention, FullyMaskedRowThrowsUnlessAllowed) {
  Rng rng(8);
  const Tensor q = randn({1, 1, 2, 2}, rng);
  AttentionMask mask{{1, 0, 0, 0}, {2, 2}};
  EXPECT_THROW(attention_weights(q, q, Tensor(), &mask, 0, false), std::domain_error);
  const Tensor w = attention_weights(q, q, Tensor(), &mask, 0, true);
  EXPECT_EQ(w.at({0, 0, 1, 0}), 0.0);
  EXPECT_EQ(w.at({0, 0, 1, 1}), 0.0);
}

TEST(Attention, RpeLogitsDifferByBuiltBias) {
  Rng rng(9);
  const int64_t h = 3, dk = 5;
  PositionGrid g(3, 3);
  RpeTable table(h, randn({RpeTable::rows_for(h), dk}, rng));
  const Tensor q = randn({g.tokens(), dk}, rng), k = randn({g.tokens(), dk}, rng);
  const Tensor plain = mul_scalar(matmul(q, transpose(k, 0, 1)), 1.0 / std::sqrt(dk));
  const auto pos = grid_positions(g);
  const Tensor with = add(plain, rpe_bias(q, {table.weights()}, RpeIndexer(PeMode::rpe_diamond, h), pos, pos));
  const Tensor diff = sub(with, plain);
  const Tensor built = build_rpe_bias(g, table, q);
  for (int64_t i = 0; i < diff.numel(); ++i) EXPECT_NEAR(diff.data()[i], built.data()[i], 1e-12);
}

TEST(Attention, PermutationEquivariantWithoutPositions) {
  Rng rng(10);
  MultiHeadAttention mha(6, 2, RpeIndexer(PeMode::none, 1), rng);
  const Tensor x = randn({1, 5, 6}, rng);
  const std::vector<int64_t> perm{3, 0, 4, 1, 2};
  const Tensor y = mha.forward(x, x, {});
  const Tensor xp = index_select(x, 1, perm);
  const Tensor yp = mha.forward(xp, xp, {});
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t c = 0; c < 6; ++c) EXPECT_NEAR(yp.at({0, i, c}), y.at({0, perm[i], c}), 1e-12);
}

TEST(Attention, UnselectedLogitsGetZeroGradient) {
  Rng rng(11);
  Tensor logits = randn({3, 5}, rng);
  logits.set_requires_grad(true);
  AttentionMask mask{{1, 1, 1, 0, 1, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1}, {3, 5}};
  const Tensor f = topk_filter(mask_fill(logits, mask.keep, mask.shape, -kInf), 2);
  const Tensor w = softmax(f);
  backward(sum(mul(w, randn({3, 5}, rng))));
  for (int64_t i = 0; i < 15; ++i) {
    if (!std::isfinite(f.data()[i])) EXPECT_EQ(logits.grad()[i], 0.0);
  }
}

TEST(Attention, GradientsMatchFiniteDifferences) {
  Rng rng(12);
  MultiHeadAttention mha(8, 2, RpeIndexer(PeMode::rpe_diamond, 2), rng);
  randomize(mha, rng);
  const auto pos = positions(2, 3);
  const Tensor x = randn({2, 6, 8}, rng);
  const Tensor proj = randn({2, 6, 8}, rng);
  AttendOptions opt;
  opt.query_pos = &pos;
  opt.key_pos = &pos;
  opt.topk = 4;
  ParamList params;
  mha.collect("attn", params);
  std::vector<Tensor> ps;
  for (auto& p : params) ps.push_back(p.value);
  const auto report = grad_check_params([&] { return sum(mul(mha.forward(x, x, opt), proj)); }, ps, 1e-4, 1e-4);
  EXPECT_LT(report.max_rel_error, 1e-5) << report.worst_param << " " << report.analytic << " " << report.numeric;
}

}  // namespace
}  // namespace tfc
