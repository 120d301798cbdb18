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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tfc/model.hpp"
#include "tfc/ops.hpp"
#include "test_models.hpp"

namespace tfc {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tfc_model_test_" + name)).string();
}

TEST(ModelConfig, KeyValueRoundTrip) {
  ModelConfig m = testing::tiny_model();
  m.mode = CodecMode::parallel;
  m.bidirectional = false;
  m.lambda = 0.0125;
  m.entropy.pe = PeMode::rpe_1d1d;
  m.entropy.topk = 0;
  const ModelConfig r = ModelConfig::from_kv(m.to_kv());
  EXPECT_EQ(r.to_kv().entries(), m.to_kv().entries());
  EXPECT_EQ(r.mode, CodecMode::parallel);
  EXPECT_EQ(r.entropy.pe, PeMode::rpe_1d1d);
  EXPECT_EQ(r.lambda, 0.0125);
}

TEST(ModelConfig, Validation) {
  ModelConfig m = testing::tiny_model();
  EXPECT_NO_THROW(m.validate());
  m.ae_channels = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  EXPECT_THROW(parse_codec_mode("fast"), std::invalid_argument);
  EXPECT_EQ(parse_codec_mode(codec_mode_name(CodecMode::parallel)), CodecMode::parallel);
}

TEST(Checkpoint, SaveLoadIsBitExact) {
  const CompressionModel m(testing::tiny_model(), 3);
  const std::string path = temp_path("rt.ckpt");
  m.save(path);
  const CompressionModel r = CompressionModel::load(path);
  ASSERT_EQ(r.params().size(), m.params().size());
  for (size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(r.params()[i].name, m.params()[i].name);
    ASSERT_EQ(r.params()[i].value.shape(), m.params()[i].value.shape());
    for (int64_t j = 0; j < m.params()[i].value.numel(); ++j) {
      ASSERT_EQ(r.params()[i].value.data()[j], m.params()[i].value.data()[j]);
    }
  }
  EXPECT_EQ(r.hash(), m.hash());
  EXPECT_EQ(r.config().to_kv().entries(), m.config().to_kv().entries());
  std::remove(path.c_str());
}

TEST(Checkpoint, DamagedFilesRejected) {
  const CompressionModel m(testing::tiny_model(), 4);
  const std::string path = temp_path("bad.ckpt");
  m.save(path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  EXPECT_ANY_THROW(CompressionModel::load(path));
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "not a checkpoint\n";
  }
  EXPECT_ANY_THROW(CompressionModel::load(path));
  EXPECT_ANY_THROW(CompressionModel::load(temp_path("missing.ckpt")));
  std::remove(path.c_str());
}

TEST(Model, HashTracksWeightsAndConfig) {
  CompressionModel a(testing::tiny_model(), 5);
  const CompressionModel b(testing::tiny_model(), 5), c(testing::tiny_model(), 6);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  a.params()[3].value.mutable_data()[0] += 1e-12;
  EXPECT_NE(a.hash(), b.hash());
  ModelConfig other = testing::tiny_model();
  other.lambda = 0.5;
  EXPECT_NE(CompressionModel(other, 5).hash(), b.hash());
}

TEST(Model, CopyParams) {
  CompressionModel a(testing::tiny_model(), 7);
  const CompressionModel b(testing::tiny_model(), 8);
  a.copy_params_from(b);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_THROW(a.copy_params_from(CompressionModel(testing::tiny_model(false, true), 8)), std::exception);
}

TEST(Model, EntropyParamsExcludeTransforms) {
  const CompressionModel m(testing::tiny_model(), 9);
  const ParamList e = m.entropy_params();
  EXPECT_FALSE(e.empty());
  EXPECT_LT(e.size(), m.params().size());
  for (const auto& p : e) EXPECT_NE(p.name.rfind("ae.", 0), 0u) << p.name;
}

TEST(Model, LinearWeightsAreTruncatedNormal) {
  const CompressionModel m(ModelConfig{}, 10);
  int64_t checked = 0;
  for (const auto& p : m.params()) {
    const bool linear = p.value.rank() == 2 && p.name.size() > 7 &&
                        p.name.compare(p.name.size() - 7, 7, ".weight") == 0;
    if (!linear) continue;
    for (double v : p.value.data()) ASSERT_LE(std::abs(v), 2 * kInitStd) << p.name;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(EntropyForward, ShapesAndProbabilityRange) {
  const CompressionModel m(testing::tiny_model(), 11);
  Rng rng(1);
  const Tensor y = randn({2, 4, 4, 8}, rng, 2.0);
  for (ContextRegime r : {ContextRegime::serial, ContextRegime::parallel}) {
    EntropyOptions o;
    o.regime = r;
    const EntropyForward f = m.entropy_forward(y, o, nullptr);
    EXPECT_EQ(f.latent_probs.shape(), (Shape{2, 32, 4}));
    EXPECT_EQ(f.hyper_probs.shape(), (Shape{2, 2, 1, 2}));
    for (double p : f.latent_probs.data()) {
      ASSERT_GE(p, kProbFloor);
      ASSERT_LE(p, 1.0);
    }
  }
  EntropyOptions train;
  train.training = true;
  EXPECT_THROW(m.entropy_forward(y, train, nullptr), std::invalid_argument);
  EXPECT_THROW(m.entropy_forward(randn({1, 3, 4, 4}, rng), {}, nullptr), ShapeError);
}

TEST(EntropyForward, ZeroMaskRatioEqualsSerial) {
  const CompressionModel m(testing::tiny_model(), 12);
  Rng data(2);
  const Tensor y = randn({2, 4, 4, 4}, data, 2.0);
  EntropyOptions serial;
  EntropyOptions masked;
  masked.regime = ContextRegime::random_mask;
  masked.mask_ratio = 0.0;
  Rng rng(3);
  const EntropyForward a = m.entropy_forward(y, serial, nullptr);
  const EntropyForward b = m.entropy_forward(y, masked, &rng);
  for (int64_t i = 0; i < a.latent_probs.numel(); ++i) {
    ASSERT_EQ(a.latent_probs.data()[i], b.latent_probs.data()[i]);
  }
}

TEST(EntropyForward, CorruptedValuesDoNotReachPredictions) {
  const CompressionModel m(testing::tiny_model(), 13);
  Rng data(4);
  const Tensor y = randn({2, 4, 4, 4}, data, 2.0);
  EntropyOptions o;
  o.regime = ContextRegime::random_mask;
  o.mask_ratio = 0.5;
  Rng r1(5);
  const EntropyForward a = m.entropy_forward(y, o, &r1);
  ASSERT_EQ(a.corrupted.size(), 32u);
  int64_t hidden = 0;
  for (uint8_t c : a.corrupted) hidden += c;
  EXPECT_GT(hidden, 4);  // Bernoulli(0.5) per position
  EXPECT_LT(hidden, 28);
  Tensor y2 = y.detach();
  for (int64_t b = 0; b < 2; ++b)
    for (int64_t p = 0; p < 16; ++p)
      if (a.corrupted[b * 16 + p])
        for (int64_t c = 0; c < 4; ++c) y2.mutable_data()[((b * 4 + c) * 16) + p] += 7.0;
  // The hyperprior sees y itself; drop it to isolate the context path.
  const CompressionModel ctx_only(testing::tiny_model(false, true), 13);
  Rng r2(5), r3(5);
  const EntropyForward c1 = ctx_only.entropy_forward(y, o, &r2);
  const EntropyForward c2 = ctx_only.entropy_forward(y2, o, &r3);
  ASSERT_EQ(c1.corrupted, c2.corrupted);
  for (int64_t i = 0; i < c1.params.mu.numel(); ++i) {
    ASSERT_EQ(c1.params.mu.data()[i], c2.params.mu.data()[i]);
    ASSERT_EQ(c1.params.sigma.data()[i], c2.params.sigma.data()[i]);
  }
}

}  // namespace
}  // namespace tfc
