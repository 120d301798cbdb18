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

#include <string>
#include <utility>
#include <vector>

#include "tfc/random.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

struct NamedParam {
  std::string name;
  Tensor value;
};
using ParamList = std::vector<NamedParam>;

// Registers a parameter: marks it as requiring grad and appends it.
void register_param(ParamList& out, const std::string& name, Tensor& t);

inline constexpr double kInitStd = 0.02;

/// y = x W + b over the last axis. W: [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(int64_t in, int64_t out, Rng& rng, double std = kInitStd, bool with_bias = true);
  int64_t in_features() const { return weight.dim(0); }
  int64_t out_features() const { return weight.dim(1); }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  explicit LayerNorm(int64_t dim);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

/// d -> ratio*d -> d with GELU.
struct FeedForward {
  Linear up;
  Linear down;

  FeedForward() = default;
  FeedForward(int64_t dim, int64_t ratio, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

}  // namespace tfc
