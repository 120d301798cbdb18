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

#include "tfc/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tfc/ops.hpp"

namespace tfc {

Tensor attention_weights(const Tensor& q, const Tensor& k, const Tensor& bias,
                         const AttentionMask* mask, int64_t topk, bool allow_empty_rows,
                         AttentionTrace* trace) {
  if (q.rank() < 2 || k.rank() != q.rank() || q.dim(-1) != k.dim(-1)) {
    throw ShapeError("attention: queries " + shape_str(q.shape()) + " vs keys " +
                     shape_str(k.shape()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(-1)));
  Tensor logits = mul_scalar(matmul(q, transpose(k, -1, -2)), scale);
  if (bias.defined()) logits = add(logits, bias);
  if (mask && !mask->empty()) {
    logits = mask_fill(logits, mask->keep, mask->shape, -std::numeric_limits<double>::infinity());
  }
  const int64_t nk = k.dim(-2);
  if (topk > 0 && topk < nk) logits = topk_filter(logits, topk);
  Tensor w = softmax(logits, allow_empty_rows);
  if (trace) {
    trace->weights.push_back(w.detach());
    std::vector<uint8_t> alive(static_cast<size_t>(logits.numel()));
    const auto ld = logits.data();
    for (size_t i = 0; i < alive.size(); ++i) alive[i] = std::isfinite(ld[i]) ? 1 : 0;
    trace->survivors.push_back(std::move(alive));
  }
  return w;
}

MultiHeadAttention::MultiHeadAttention(int64_t d_model, int64_t heads, const RpeIndexer& rpe,
                                       Rng& rng)
    : heads_(heads),
      rpe_(rpe),
      wq_(d_model, d_model, rng),
      wk_(d_model, d_model, rng),
      wv_(d_model, d_model, rng),
      wo_(d_model, d_model, rng) {
  if (heads < 1 || d_model % heads) {
    throw std::invalid_argument("attention: d_model " + std::to_string(d_model) +
                                " not divisible by heads " + std::to_string(heads));
  }
  for (int t = 0; t < rpe_.num_tables(); ++t) {
    tables_.push_back(trunc_normal({rpe_.table_rows(), d_model / heads}, rng, kInitStd));
  }
}

Tensor MultiHeadAttention::split_heads(const Tensor& x) const {
  const int64_t b = x.dim(0), n = x.dim(1);
  return permute(reshape(x, {b, n, heads_, d_head()}), {2, 0, 1, 3});
}

Tensor MultiHeadAttention::merge_heads(const Tensor& x) const {
  const int64_t b = x.dim(1), n = x.dim(2);
  return reshape(permute(x, {1, 2, 0, 3}), {b, n, d_model()});
}

Tensor MultiHeadAttention::forward(const Tensor& xq, const Tensor& xkv,
                                   const AttendOptions& opt) const {
  if (xq.rank() != 3 || xkv.rank() != 3 || xq.dim(0) != xkv.dim(0) ||
      xq.dim(2) != d_model() || xkv.dim(2) != d_model()) {
    throw ShapeError("attention: queries " + shape_str(xq.shape()) + " vs keys " +
                     shape_str(xkv.shape()));
  }
  const Tensor q = split_heads(wq_(xq));
  const Tensor k = split_heads(wk_(xkv));
  const Tensor v = split_heads(wv_(xkv));
  Tensor bias;
  if (rpe_.enabled()) {
    if (!opt.query_pos || !opt.key_pos ||
        static_cast<int64_t>(opt.query_pos->size()) != xq.dim(1) ||
        static_cast<int64_t>(opt.key_pos->size()) != xkv.dim(1)) {
      throw std::invalid_argument("attention: relative position encoding needs token positions");
    }
    bias = rpe_bias(q, tables_, rpe_, *opt.query_pos, *opt.key_pos);
  }
  if (opt.extra_bias) bias = bias.defined() ? add(bias, *opt.extra_bias) : *opt.extra_bias;
  const Tensor w =
      attention_weights(q, k, bias, opt.mask, opt.topk, opt.allow_empty_rows, opt.trace);
  return wo_(merge_heads(matmul(w, v)));
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) {
  wq_.collect(prefix + ".wq", out);
  wk_.collect(prefix + ".wk", out);
  wv_.collect(prefix + ".wv", out);
  wo_.collect(prefix + ".wo", out);
  for (size_t t = 0; t < tables_.size(); ++t) {
    register_param(out, prefix + ".rpe" + std::to_string(t), tables_[t]);
  }
}

}  // namespace tfc
