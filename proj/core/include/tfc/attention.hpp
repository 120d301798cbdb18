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
#include <vector>

#include "tfc/nn.hpp"
#include "tfc/position.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

/// Visibility of keys to queries. shape must be a suffix of the logits shape
/// [heads, batch, nq, nk]: [nq, nk] for a shared mask, [batch, nq, nk] for a
/// per-sample one.
struct AttentionMask {
  std::vector<uint8_t> keep;
  Shape shape;
  bool empty() const { return keep.empty(); }
};

/// Captured by dump-attention: post-softmax weights and the entries that
/// survived masking and top-k, both [heads, batch, nq, nk].
struct AttentionTrace {
  std::vector<Tensor> weights;
  std::vector<std::vector<uint8_t>> survivors;
};

/// Weights of multi-head attention. q/k/v: [heads, batch, n, d_k].
/// logits = q k^T / sqrt(d_k) + bias; masked entries -> -inf; then top-k per
/// row (per head); then softmax. A fully masked row throws unless
/// allow_empty_rows, which yields zero weights for that row.
Tensor attention_weights(const Tensor& q, const Tensor& k, const Tensor& bias,
                         const AttentionMask* mask, int64_t topk, bool allow_empty_rows,
                         AttentionTrace* trace = nullptr);

struct AttendOptions {
  const AttentionMask* mask = nullptr;
  const std::vector<TokenPos>* query_pos = nullptr;  // required with relative PE
  const std::vector<TokenPos>* key_pos = nullptr;
  int64_t topk = 0;  // 0 or >= nk: dense
  bool allow_empty_rows = false;
  const Tensor* extra_bias = nullptr;  // added to the logits, suffix of [H, B, nq, nk]
  AttentionTrace* trace = nullptr;
};

/// Multi-head attention with per-layer relative-position tables shared by
/// all heads.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(int64_t d_model, int64_t heads, const RpeIndexer& rpe, Rng& rng);

  int64_t heads() const { return heads_; }
  int64_t d_model() const { return wq_.in_features(); }
  int64_t d_head() const { return d_model() / heads_; }
  const RpeIndexer& rpe() const { return rpe_; }

  /// xq: [B, nq, d]; xkv: [B, nk, d]. Returns [B, nq, d].
  Tensor forward(const Tensor& xq, const Tensor& xkv, const AttendOptions& opt) const;

  // [B, n, d] -> [H, B, n, d_k] and back.
  Tensor split_heads(const Tensor& x) const;
  Tensor merge_heads(const Tensor& x) const;

  Linear& wq() { return wq_; }
  Linear& wk() { return wk_; }
  Linear& wv() { return wv_; }
  Linear& wo() { return wo_; }
  std::vector<Tensor>& rpe_tables() { return tables_; }
  const std::vector<Tensor>& rpe_tables() const { return tables_; }

  void collect(const std::string& prefix, ParamList& out);

 private:
  int64_t heads_ = 1;
  RpeIndexer rpe_{PeMode::none, 1};
  Linear wq_, wk_, wv_, wo_;
  std::vector<Tensor> tables_;
};

}  // namespace tfc
