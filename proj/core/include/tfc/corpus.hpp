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

// Training and evaluation images: seeded procedural scenes or a directory of
// PNG/PPM files.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfc/random.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

/// One procedural RGB image [1, 3, h, w] in [0, 1]: layered gradients,
/// checkerboards, Gaussian blobs and smooth sinusoidal texture.
Tensor synthetic_image(int64_t height, int64_t width, Rng& rng);
/// Images 0..count-1 of the seeded stream; a set is a pure function of its
/// arguments.
std::vector<Tensor> synthetic_set(int64_t count, int64_t height, int64_t width, uint64_t seed);

class Corpus {
 public:
  // Fresh procedural images drawn from the caller's rng.
  static Corpus synthetic();
  /// Every .png/.ppm file directly inside dir, in name order. Throws if none.
  static Corpus directory(const std::string& dir);

  bool is_synthetic() const { return images_.empty(); }
  const std::vector<std::string>& paths() const { return paths_; }

  /// [B, 3, patch, patch] random crops (images smaller than the patch are
  /// mirror-padded first).
  Tensor batch(int64_t batch, int64_t patch, Rng& rng) const;

 private:
  std::vector<std::string> paths_;
  std::vector<Tensor> images_;
};

/// Stacks [1, ...] tensors along axis 0.
Tensor stack_batch(const std::vector<Tensor>& items);

}  // namespace tfc
