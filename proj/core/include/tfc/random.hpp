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

#pragma once

#include <cstdint>
#include <random>

#include "tfc/tensor.hpp"

namespace tfc {

// Seeded generator with distribution code written out by hand so that draws
// are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  int64_t randint(int64_t n);
  double normal();
  // Normal(0, std) restricted to [-2 std, 2 std] by rejection.
  double truncated_normal(double std);
  bool bernoulli(double p) { return uniform() < p; }
  // Independent child stream.
  Rng split() { return Rng(eng_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Tensor randn(Shape shape, Rng& rng, double std = 1.0);
Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi);
Tensor trunc_normal(Shape shape, Rng& rng, double std);

}  // namespace tfc
