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

#include "tfc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "tfc/image.hpp"
#include "tfc/ops.hpp"

namespace tfc {

namespace {

struct Color {
  double c[3];
};

Color random_color(Rng& rng) { return {{rng.uniform(), rng.uniform(), rng.uniform()}}; }

}  // namespace

Tensor synthetic_image(int64_t height, int64_t width, Rng& rng) {
  const int64_t hw = height * width;
  std::vector<double> img(static_cast<size_t>(3 * hw));
  auto px = [&](int64_t c, int64_t y, int64_t x) -> double& { return img[c * hw + y * width + x]; };

  // Background gradient.
  const Color a = random_color(rng), b = random_color(rng);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(angle), gy = std::sin(angle);
  const double span = std::abs(gx) * width + std::abs(gy) * height;
  for (int64_t y = 0; y < height; ++y)
    for (int64_t x = 0; x < width; ++x) {
      double t = (gx * x + gy * y) / span;
      t -= std::floor(t);
      for (int c = 0; c < 3; ++c) px(c, y, x) = a.c[c] + (b.c[c] - a.c[c]) * t;
    }

  // Checkerboard patch.
  if (rng.bernoulli(0.6)) {
    const int64_t cell = 3 + rng.randint(10);
    const int64_t y0 = rng.randint(height), x0 = rng.randint(width);
    const int64_t y1 = std::min(height, y0 + 8 + rng.randint(height));
    const int64_t x1 = std::min(width, x0 + 8 + rng.randint(width));
    const Color c0 = random_color(rng), c1 = random_color(rng);
    for (int64_t y = y0; y < y1; ++y)
      for (int64_t x = x0; x < x1; ++x) {
        const Color& col = ((y - y0) / cell + (x - x0) / cell) % 2 ? c1 : c0;
        for (int c = 0; c < 3; ++c) px(c, y, x) = col.c[c];
      }
  }

  // Gaussian blobs.
  const int64_t blobs = 2 + rng.randint(6);
  for (int64_t k = 0; k < blobs; ++k) {
    const double cy = rng.uniform(0, height), cx = rng.uniform(0, width);
    const double r = rng.uniform(2.0, 0.3 * std::max(height, width) + 2.0);
    const Color col = random_color(rng);
    const double strength = rng.uniform(0.4, 1.0);
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x) {
        const double d2 = ((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (r * r);
        if (d2 > 9.0) continue;
        const double wgt = strength * std::exp(-0.5 * d2);
        for (int c = 0; c < 3; ++c) px(c, y, x) += wgt * (col.c[c] - px(c, y, x));
      }
  }

  // Smooth texture.
  const int64_t waves = rng.randint(4);
  for (int64_t k = 0; k < waves; ++k) {
    const double fy = rng.uniform(-0.5, 0.5), fx = rng.uniform(-0.5, 0.5);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.02, 0.12);
    const Color col = random_color(rng);
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x) {
        const double s = amp * std::sin(fy * y + fx * x + phase);
        for (int c = 0; c < 3; ++c) px(c, y, x) += s * (col.c[c] - 0.5) * 2.0;
      }
  }

  for (auto& v : img) v = std::clamp(v + 0.01 * rng.normal(), 0.0, 1.0);
  return Tensor::from_data({1, 3, height, width}, std::move(img));
}

std::vector<Tensor> synthetic_set(int64_t count, int64_t height, int64_t width, uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  for (int64_t i = 0; i < count; ++i) out.push_back(synthetic_image(height, width, rng));
  return out;
}

Corpus Corpus::synthetic() { return Corpus(); }

Corpus Corpus::directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::invalid_argument("corpus: not a directory: " + dir);
  Corpus c;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".ppm") c.paths_.push_back(e.path().string());
  }
  std::sort(c.paths_.begin(), c.paths_.end());
  if (c.paths_.empty()) throw std::invalid_argument("corpus: no .png or .ppm files in " + dir);
  for (const auto& p : c.paths_) c.images_.push_back(load_image(p));
  return c;
}

Tensor Corpus::batch(int64_t batch, int64_t patch, Rng& rng) const {
  if (batch < 1 || patch < 1) throw std::invalid_argument("corpus: batch and patch must be positive");
  std::vector<Tensor> items;
  for (int64_t i = 0; i < batch; ++i) {
    if (images_.empty()) {
      items.push_back(synthetic_image(patch, patch, rng));
      continue;
    }
    Tensor img = images_[static_cast<size_t>(rng.randint(static_cast<int64_t>(images_.size())))];
    if (img.dim(2) < patch || img.dim(3) < patch) img = reflect_pad(img, patch);
    const int64_t y0 = rng.randint(img.dim(2) - patch + 1);
    const int64_t x0 = rng.randint(img.dim(3) - patch + 1);
    img = slice(slice(img, 2, y0, patch), 3, x0, patch);
    items.push_back(img.detach());
  }
  return stack_batch(items);
}

Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) throw std::invalid_argument("stack_batch: no items");
  return concat(items, 0);
}

}  // namespace tfc
