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

// Transformer entropy model: hyperprior encoder/decoder stacks, a masked
// context model and the Gaussian parameter head.

#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "tfc/attention.hpp"
#include "tfc/nn.hpp"
#include "tfc/position.hpp"
#include "tfc/random.hpp"
#include "tfc/tensor.hpp"

namespace tfc {

struct EntropyConfig {
  int64_t d_model = 48;
  int64_t heads = 6;
  int64_t hyper_depth = 2;    // blocks in each hyper stack, spread over 3 resolutions
  int64_t context_depth = 4;  // always 2 * hyper_depth
  int64_t ffn_ratio = 4;
  int64_t latent_channels = 16;
  int64_t hyper_channels = 8;
  int64_t topk = 32;  // 0 = dense
  int64_t rpe_h = 3;
  PeMode pe = PeMode::rpe_diamond;
  bool use_hyper = true;
  bool use_context = true;

  void validate() const;  // throws std::invalid_argument
};

struct GaussianParams {
  Tensor mu;     // [B, n, C]
  Tensor sigma;  // [B, n, C], >= kSigmaFloor
};

/// Which memory tokens the context model sees. The memory always starts with
/// the learned start token (visible to every query), followed by the latent
/// positions listed in keys. mask covers [nq, 1 + nk] or, for per-sample
/// masks, [B, nq, 1 + nk]; an empty mask means everything is visible.
struct ContextPlan {
  std::vector<int64_t> queries;
  std::vector<int64_t> keys;
  AttentionMask mask;
};

// Checkerboard split: slice 1 holds the positions with even row + col.
bool in_first_slice(int64_t row, int64_t col);
std::vector<int64_t> slice_positions(const PositionGrid& grid, int slice);

/// Raster-causal: query p sees latents 0..p-1.
ContextPlan serial_plan(int64_t tokens);
/// The single query p of serial decoding, with exactly its visible prefix as
/// memory. Produces the same features as row p of serial_plan.
ContextPlan serial_step_plan(int64_t position);
/// Second checkerboard pass: slice-2 queries over slice-1 keys, either all of
/// them or only those earlier in raster order.
ContextPlan pass2_plan(const PositionGrid& grid, bool bidirectional);
/// Raster-causal with the corrupted positions (per sample, B x n flags)
/// removed from every query's keys.
ContextPlan random_mask_plan(int64_t tokens, int64_t batch, const std::vector<uint8_t>& corrupted);
/// Raster-causal with the key at query + offset hidden from each query.
ContextPlan drop_offset_plan(const PositionGrid& grid, Offset offset);

// [B, C, H, W] <-> [B, H*W, C]
Tensor image_to_tokens(const Tensor& x);
Tensor tokens_to_image(const Tensor& t, int64_t height, int64_t width);

class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(int64_t d_model, int64_t heads, int64_t ffn_ratio, const RpeIndexer& rpe,
                   bool cross, Rng& rng);

  /// Self-attention when memory is undefined, otherwise attention from x
  /// into memory. Pre-norm residual form.
  Tensor forward(const Tensor& x, const Tensor& memory, const AttendOptions& opt) const;

  MultiHeadAttention& attention() { return attn_; }
  void collect(const std::string& prefix, ParamList& out);

 private:
  LayerNorm ln_attn_, ln_mem_, ln_ffn_;
  MultiHeadAttention attn_;
  FeedForward ffn_;
  bool cross_ = false;
};

class EntropyTransformer {
 public:
  EntropyTransformer() = default;
  EntropyTransformer(const EntropyConfig& cfg, Rng& rng);

  const EntropyConfig& config() const { return cfg_; }

  /// y: [B, C, H, W] (H, W divisible by 4) -> z: [B, Cz, H/4, W/4].
  Tensor hyper_encode(const Tensor& y) const;
  /// zhat: [B, Cz, h, w] -> hyperprior features [B, (4h)(4w), d] for a latent
  /// grid of latent_h x latent_w, which must be exactly 4x the hyper grid.
  Tensor hyper_decode(const Tensor& zhat, int64_t latent_h, int64_t latent_w) const;
  /// yhat tokens [B, n, C] -> [B, n, d].
  Tensor embed_latents(const Tensor& yhat_tokens) const;
  /// Features [B, nq, d] for plan.queries. hyper may be undefined when the
  /// model has no hyperprior.
  Tensor context_features(const Tensor& yhat_tokens, const Tensor& hyper, const ContextPlan& plan,
                          const PositionGrid& grid, AttentionTrace* trace = nullptr) const;
  /// hyper, context: [B, m, d] (context may be all zeros) -> params for the
  /// m positions. Counts as one entropy-model forward pass.
  GaussianParams predict_params(const Tensor& hyper, const Tensor& context) const;

  /// Zero-filled [B, n, d] features with rows[i] placed at positions[i].
  static Tensor scatter_rows(const Tensor& rows, const std::vector<int64_t>& positions, int64_t n);
  /// [B, n, d] zeros, for positions without hyperprior or context.
  Tensor zero_features(int64_t batch, int64_t tokens) const;

  int64_t predict_calls() const { return predict_calls_.value.load(); }
  void reset_predict_calls() { predict_calls_.value.store(0); }

  void collect(const std::string& prefix, ParamList& out);

 private:
  Tensor hyper_blocks(const std::vector<TransformerBlock>& blocks, const Tensor& x,
                      const PositionGrid& grid) const;
  Tensor add_absolute_pe(const Tensor& x, const PositionGrid& grid,
                         const std::vector<int64_t>* positions) const;

  EntropyConfig cfg_;
  RpeIndexer rpe_{PeMode::none, 1};
  // Hyper encoder.
  Linear henc_in_;
  std::vector<std::vector<TransformerBlock>> henc_;
  std::vector<Tensor> down_w_, down_b_;
  LayerNorm henc_norm_;
  Linear henc_out_;
  // Hyper decoder.
  Linear hdec_in_;
  std::vector<std::vector<TransformerBlock>> hdec_;
  std::vector<Tensor> up_w_, up_b_;
  LayerNorm hdec_norm_;
  // Context model.
  Linear embed_;
  Linear query_from_hyper_;
  Tensor start_token_;
  Tensor mask_token_;
  std::vector<TransformerBlock> ctx_;
  LayerNorm ctx_norm_;
  // Parameter head.
  Linear head1_, head2_;

  struct Counter {
    std::atomic<int64_t> value{0};
    Counter() = default;
    Counter(const Counter& o) : value(o.value.load()) {}
    Counter& operator=(const Counter& o) {
      value.store(o.value.load());
      return *this;
    }
  };
  mutable Counter predict_calls_;
};

}  // namespace tfc
