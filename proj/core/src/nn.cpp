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

#include "tfc/nn.hpp"

#include "tfc/ops.hpp"

namespace tfc {

void register_param(ParamList& out, const std::string& name, Tensor& t) {
  if (!t.defined()) return;
  t.set_requires_grad(true);
  out.push_back({name, t});
}

Linear::Linear(int64_t in, int64_t out, Rng& rng, double std, bool with_bias)
    : weight(trunc_normal({in, out}, rng, std)) {
  if (with_bias) bias = Tensor::zeros({out});
}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.rank() == 0 || x.dim(-1) != in_features()) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " +
                     shape_str(weight.shape()));
  }
  Tensor y;
  if (x.rank() == 1) {
    y = reshape(matmul(reshape(x, {1, in_features()}), weight), {out_features()});
  } else {
    y = matmul(x, weight);
  }
  return bias.defined() ? add(y, bias) : y;
}

void Linear::collect(const std::string& prefix, ParamList& out) {
  register_param(out, prefix + ".weight", weight);
  register_param(out, prefix + ".bias", bias);
}

LayerNorm::LayerNorm(int64_t dim) : gamma(Tensor::ones({dim})), beta(Tensor::zeros({dim})) {}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

void LayerNorm::collect(const std::string& prefix, ParamList& out) {
  register_param(out, prefix + ".gamma", gamma);
  register_param(out, prefix + ".beta", beta);
}

FeedForward::FeedForward(int64_t dim, int64_t ratio, Rng& rng)
    : up(dim, dim * ratio, rng), down(dim * ratio, dim, rng) {}

Tensor FeedForward::operator()(const Tensor& x) const { return down(gelu(up(x))); }

void FeedForward::collect(const std::string& prefix, ParamList& out) {
  up.collect(prefix + ".up", out);
  down.collect(prefix + ".down", out);
}

}  // namespace tfc
