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

#include "tfc/random.hpp"

#include <cmath>
#include <stdexcept>

namespace tfc {

int64_t Rng::randint(int64_t n) {
  if (n <= 0) throw std::invalid_argument("randint: n must be positive");
  const uint64_t un = static_cast<uint64_t>(n);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return static_cast<int64_t>(v % un);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 6.283185307179586477 * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

double Rng::truncated_normal(double std) {
  double v;
  do {
    v = normal();
  } while (v < -2.0 || v > 2.0);
  return v * std;
}

Tensor randn(Shape shape, Rng& rng, double std) {
  std::vector<double> d(static_cast<size_t>(numel_of(shape)));
  for (auto& v : d) v = rng.normal() * std;
  return Tensor::from_data(std::move(shape), std::move(d));
}

Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> d(static_cast<size_t>(numel_of(shape)));
  for (auto& v : d) v = rng.uniform(lo, hi);
  return Tensor::from_data(std::move(shape), std::move(d));
}

Tensor trunc_normal(Shape shape, Rng& rng, double std) {
  std::vector<double> d(static_cast<size_t>(numel_of(shape)));
  for (auto& v : d) v = rng.truncated_normal(std);
  return Tensor::from_data(std::move(shape), std::move(d));
}

}  // namespace tfc
