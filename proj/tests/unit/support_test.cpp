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
#include <sstream>

#include "tfc/config_file.hpp"
#include "tfc/corpus.hpp"
#include "tfc/image.hpp"
#include "tfc/ops.hpp"
#include "tfc/stats.hpp"

namespace tfc {
namespace {

std::string data_path(const std::string& name) { return std::string(TFC_TEST_DATA_DIR) + "/" + name; }

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tfc_support_test_" + name)).string();
}

TEST(Image, LoadsBundledPhotos) {
  const Tensor x = load_image(data_path("coffee_120x80.png"));
  EXPECT_EQ(x.shape(), (Shape{1, 3, 80, 120}));
  for (double v : x.data()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  EXPECT_THROW(load_image(data_path("missing.png")), std::runtime_error);
}

TEST(Image, PngAndPpmRoundTripExactly) {
  Rng rng(1);
  const Tensor x = quantize_8bit(rand_uniform({1, 3, 7, 9}, rng, 0, 1));
  for (const char* ext : {".png", ".ppm"}) {
    const std::string path = temp_path(std::string("rt") + ext);
    save_image(path, x);
    const Tensor y = load_image(path);
    ASSERT_EQ(y.shape(), x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) ASSERT_EQ(y.data()[i], x.data()[i]) << ext;
    std::remove(path.c_str());
  }
}

TEST(Image, QuantizeClampsAndRounds) {
  const Tensor q = quantize_8bit(Tensor::from_data({1, 3, 1, 1}, {-0.2, 0.5, 1.7}));
  EXPECT_EQ(q.data()[0], 0.0);
  EXPECT_EQ(q.data()[1], 128.0 / 255.0);
  EXPECT_EQ(q.data()[2], 1.0);
}

TEST(Image, ReflectPadThenCropRestores) {
  Rng rng(2);
  for (auto [h, w] : {std::pair<int64_t, int64_t>{5, 7}, {16, 16}, {17, 3}, {1, 1}}) {
    const Tensor x = rand_uniform({1, 3, h, w}, rng, 0, 1);
    const Tensor p = reflect_pad(x, 16);
    EXPECT_EQ(p.dim(2) % 16, 0);
    EXPECT_EQ(p.dim(3) % 16, 0);
    EXPECT_GE(p.dim(2), h);
    EXPECT_LT(p.dim(2), h + 16);
    const Tensor c = crop(p, h, w);
    for (int64_t i = 0; i < x.numel(); ++i) ASSERT_EQ(c.data()[i], x.data()[i]);
  }
}

TEST(Image, ReflectPadMirrorsWithoutRepeatingEdge) {
  const Tensor x = Tensor::from_data({1, 1, 1, 3}, {1, 2, 3});
  const Tensor p = reflect_pad(x, 8);
  const std::vector<double> row{1, 2, 3, 2, 1, 2, 3, 2};
  for (int64_t c = 0; c < 8; ++c) EXPECT_EQ(p.at({0, 0, 0, c}), row[c]);
}

TEST(Corpus, SyntheticSetIsPureFunctionOfSeed) {
  const auto a = synthetic_set(3, 32, 48, 4), b = synthetic_set(3, 32, 48, 4);
  const auto c = synthetic_set(3, 32, 48, 5);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].shape(), (Shape{1, 3, 32, 48}));
  for (size_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < a[i].numel(); ++j) ASSERT_EQ(a[i].data()[j], b[i].data()[j]);
  }
  bool differs = false;
  for (int64_t j = 0; j < a[0].numel(); ++j) differs |= a[0].data()[j] != c[0].data()[j];
  EXPECT_TRUE(differs);
  for (double v : a[1].data()) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Corpus, DirectoryBatchesCropToPatch) {
  const Corpus c = Corpus::directory(TFC_TEST_DATA_DIR);
  EXPECT_EQ(c.paths().size(), 4u);
  EXPECT_FALSE(c.is_synthetic());
  Rng rng(6);
  EXPECT_EQ(c.batch(3, 96, rng).shape(), (Shape{3, 3, 96, 96}));
  EXPECT_EQ(Corpus::synthetic().batch(2, 32, rng).shape(), (Shape{2, 3, 32, 32}));
  EXPECT_THROW(Corpus::directory(temp_path("no_such_dir")), std::invalid_argument);
}

TEST(Stats, RanksAndCorrelations) {
  EXPECT_EQ(average_ranks({10, 30, 20, 20}), (std::vector<double>{1, 4, 2.5, 2.5}));
  EXPECT_NEAR(pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
  const Correlation c = spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7});
  // Reference values from scipy.stats.spearmanr.
  EXPECT_NEAR(c.rho, 0.820782681668123, 1e-9);
  EXPECT_EQ(c.n, 5);
  const Correlation neg = spearman({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
  EXPECT_NEAR(neg.rho, -1.0, 1e-12);
  EXPECT_LT(neg.p_value, 1e-6);
  // t = rho sqrt((n-2)/(1-rho^2)) with n = 5: p from the Student-t tail.
  EXPECT_NEAR(c.p_value, 0.0886, 1e-3);
  EXPECT_THROW(spearman({1, 2}, {2, 1}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(mean({1, 2, 6}), 3.0);
  EXPECT_DOUBLE_EQ(median({5, 1, 3, 2}), 2.5);
}

TEST(KeyValues, RoundTripAndErrors) {
  KeyValues kv;
  kv.set("name", "diamond");
  kv.set("steps", int64_t{42});
  kv.set("lr", 1.5e-4);
  kv.set("flag", true);
  std::stringstream ss;
  kv.write(ss);
  EXPECT_EQ(ss.str().rfind("# tfcodec-config 1\n", 0), 0u);
  const KeyValues r = KeyValues::parse(ss);
  EXPECT_EQ(r.get("name"), "diamond");
  EXPECT_EQ(r.get_int("steps"), 42);
  EXPECT_EQ(r.get_double("lr"), 1.5e-4);
  EXPECT_TRUE(r.get_bool("flag"));
  EXPECT_EQ(r.get_int("absent", 7), 7);
  EXPECT_THROW(r.get("absent"), std::invalid_argument);
  EXPECT_THROW(r.get_int("name"), std::invalid_argument);

  std::stringstream bad("# tfcodec-config 99\na = 1\n");
  EXPECT_THROW(KeyValues::parse(bad), std::invalid_argument);
  std::stringstream junk("# tfcodec-config 1\nno equals sign\n");
  EXPECT_THROW(KeyValues::parse(junk), std::invalid_argument);
}

}  // namespace
}  // namespace tfc
