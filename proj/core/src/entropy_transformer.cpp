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

#include "tfc/entropy_transformer.hpp"

#include <cmath>
#include <stdexcept>

#include "tfc/entropy_model.hpp"
#include "tfc/ops.hpp"

namespace tfc {

namespace {

constexpr int kResolutions = 3;

int64_t blocks_in_group(int64_t depth, int g) {
  return depth / kResolutions + (g < depth % kResolutions ? 1 : 0);
}

std::vector<TokenPos> positions_of(const PositionGrid& grid, const std::vector<int64_t>& idx,
                                   bool with_start) {
  std::vector<TokenPos> out;
  out.reserve(idx.size() + (with_start ? 1 : 0));
  if (with_start) out.push_back({0, 0, true});
  for (int64_t i : idx) out.push_back({grid.row(i), grid.col(i), false});
  return out;
}

// Repeats the border row and column once on every side of [B, C, H, W].
Tensor edge_pad(const Tensor& x) {
  auto index = [](int64_t n) {
    std::vector<int64_t> idx{0};
    for (int64_t i = 0; i < n; ++i) idx.push_back(i);
    idx.push_back(n - 1);
    return idx;
  };
  return index_select(index_select(x, 2, index(x.dim(2))), 3, index(x.dim(3)));
}

std::vector<int64_t> iota_vec(int64_t n) {
  std::vector<int64_t> v(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

void EntropyConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("entropy model config: " + m); };
  if (d_model < 1 || heads < 1 || d_model % heads) fail("d_model must be a positive multiple of heads");
  if (hyper_depth < 0) fail("hyper_depth must be >= 0");
  if (context_depth != 2 * hyper_depth) fail("context_depth must equal 2 * hyper_depth");
  if (ffn_ratio < 1) fail("ffn_ratio must be >= 1");
  if (latent_channels < 1 || hyper_channels < 1) fail("channel counts must be positive");
  if (topk < 0) fail("topk must be >= 0");
  if (rpe_h < 1) fail("rpe_h must be >= 1");
  if (!use_hyper && !use_context) fail("at least one of hyperprior and context must be enabled");
}

bool in_first_slice(int64_t row, int64_t col) { return (row + col) % 2 == 0; }

std::vector<int64_t> slice_positions(const PositionGrid& grid, int slice) {
  std::vector<int64_t> out;
  for (int64_t i = 0; i < grid.tokens(); ++i) {
    if (in_first_slice(grid.row(i), grid.col(i)) == (slice == 1)) out.push_back(i);
  }
  return out;
}

ContextPlan serial_plan(int64_t tokens) {
  ContextPlan plan;
  plan.queries = iota_vec(tokens);
  plan.keys = iota_vec(tokens);
  const int64_t cols = tokens + 1;
  plan.mask.shape = {tokens, cols};
  plan.mask.keep.assign(static_cast<size_t>(tokens * cols), 0);
  for (int64_t p = 0; p < tokens; ++p) {
    for (int64_t c = 0; c <= p; ++c) plan.mask.keep[p * cols + c] = 1;  // start + 0..p-1
  }
  return plan;
}

ContextPlan serial_step_plan(int64_t position) {
  ContextPlan plan;
  plan.queries = {position};
  plan.keys = iota_vec(position);
  return plan;
}

ContextPlan pass2_plan(const PositionGrid& grid, bool bidirectional) {
  ContextPlan plan;
  plan.queries = slice_positions(grid, 2);
  plan.keys = slice_positions(grid, 1);
  if (!bidirectional) {
    const int64_t nq = static_cast<int64_t>(plan.queries.size());
    const int64_t cols = static_cast<int64_t>(plan.keys.size()) + 1;
    plan.mask.shape = {nq, cols};
    plan.mask.keep.assign(static_cast<size_t>(nq * cols), 0);
    for (int64_t q = 0; q < nq; ++q) {
      plan.mask.keep[q * cols] = 1;
      for (int64_t k = 0; k + 1 < cols; ++k) {
        if (plan.keys[k] < plan.queries[q]) plan.mask.keep[q * cols + 1 + k] = 1;
      }
    }
  }
  return plan;
}

ContextPlan random_mask_plan(int64_t tokens, int64_t batch, const std::vector<uint8_t>& corrupted) {
  if (static_cast<int64_t>(corrupted.size()) != tokens * batch) {
    throw std::invalid_argument("random_mask_plan: need one flag per sample and position");
  }
  ContextPlan plan;
  plan.queries = iota_vec(tokens);
  plan.keys = iota_vec(tokens);
  const int64_t cols = tokens + 1;
  plan.mask.shape = {batch, tokens, cols};
  plan.mask.keep.assign(static_cast<size_t>(batch * tokens * cols), 0);
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t p = 0; p < tokens; ++p) {
      uint8_t* row = plan.mask.keep.data() + (b * tokens + p) * cols;
      row[0] = 1;
      for (int64_t j = 0; j < p; ++j) row[1 + j] = corrupted[b * tokens + j] ? 0 : 1;
    }
  }
  return plan;
}

ContextPlan drop_offset_plan(const PositionGrid& grid, Offset offset) {
  ContextPlan plan = serial_plan(grid.tokens());
  const int64_t cols = grid.tokens() + 1;
  for (int64_t p = 0; p < grid.tokens(); ++p) {
    const int64_t r = grid.row(p) + offset.dy, c = grid.col(p) + offset.dx;
    if (r < 0 || r >= grid.height() || c < 0 || c >= grid.width()) continue;
    plan.mask.keep[p * cols + 1 + grid.index(r, c)] = 0;
  }
  return plan;
}

Tensor image_to_tokens(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("image_to_tokens: expected [B, C, H, W], got " + shape_str(x.shape()));
  return reshape(permute(x, {0, 2, 3, 1}), {x.dim(0), x.dim(2) * x.dim(3), x.dim(1)});
}

Tensor tokens_to_image(const Tensor& t, int64_t height, int64_t width) {
  if (t.rank() != 3 || t.dim(1) != height * width) {
    throw ShapeError("tokens_to_image: " + shape_str(t.shape()) + " vs grid " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  return permute(reshape(t, {t.dim(0), height, width, t.dim(2)}), {0, 3, 1, 2});
}

TransformerBlock::TransformerBlock(int64_t d_model, int64_t heads, int64_t ffn_ratio,
                                   const RpeIndexer& rpe, bool cross, Rng& rng)
    : ln_attn_(d_model),
      ln_mem_(d_model),
      ln_ffn_(d_model),
      attn_(d_model, heads, rpe, rng),
      ffn_(d_model, ffn_ratio, rng),
      cross_(cross) {}

Tensor TransformerBlock::forward(const Tensor& x, const Tensor& memory,
                                 const AttendOptions& opt) const {
  const Tensor n1 = ln_attn_(x);
  const Tensor kv = cross_ ? ln_mem_(memory) : n1;
  Tensor h = add(x, attn_.forward(n1, kv, opt));
  return add(h, ffn_(ln_ffn_(h)));
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) {
  ln_attn_.collect(prefix + ".ln_attn", out);
  if (cross_) ln_mem_.collect(prefix + ".ln_mem", out);
  ln_ffn_.collect(prefix + ".ln_ffn", out);
  attn_.collect(prefix + ".attn", out);
  ffn_.collect(prefix + ".ffn", out);
}

EntropyTransformer::EntropyTransformer(const EntropyConfig& cfg, Rng& rng)
    : cfg_(cfg), rpe_(cfg.pe, cfg.rpe_h) {
  cfg_.validate();
  const int64_t d = cfg.d_model, C = cfg.latent_channels, Cz = cfg.hyper_channels;
  const double conv_std = 1.0 / 3.0;  // 3x3 depthwise fan-in
  if (cfg.use_hyper) {
    henc_in_ = Linear(C, d, rng);
    hdec_in_ = Linear(Cz, d, rng);
    for (int g = 0; g < kResolutions; ++g) {
      henc_.emplace_back();
      hdec_.emplace_back();
      for (int64_t b = 0; b < blocks_in_group(cfg.hyper_depth, g); ++b) {
        henc_.back().emplace_back(d, cfg.heads, cfg.ffn_ratio, rpe_, false, rng);
        hdec_.back().emplace_back(d, cfg.heads, cfg.ffn_ratio, rpe_, false, rng);
      }
      if (g > 0) {
        down_w_.push_back(trunc_normal({d, 1, 3, 3}, rng, conv_std));
        down_b_.push_back(Tensor::zeros({d}));
        up_w_.push_back(trunc_normal({4 * d, 1, 3, 3}, rng, conv_std));
        up_b_.push_back(Tensor::zeros({4 * d}));
      }
    }
    henc_norm_ = LayerNorm(d);
    henc_out_ = Linear(d, Cz, rng);
    hdec_norm_ = LayerNorm(d);
  }
  if (cfg.use_context) {
    embed_ = Linear(C, d, rng);
    if (cfg.use_hyper) query_from_hyper_ = Linear(d, d, rng);
    start_token_ = trunc_normal({d}, rng, kInitStd);
    mask_token_ = trunc_normal({d}, rng, kInitStd);
    for (int64_t l = 0; l < cfg.context_depth; ++l) {
      ctx_.emplace_back(d, cfg.heads, cfg.ffn_ratio, rpe_, true, rng);
    }
    ctx_norm_ = LayerNorm(d);
  }
  head1_ = Linear(2 * d, 2 * d, rng);
  head2_ = Linear(2 * d, 2 * C, rng);
}

Tensor EntropyTransformer::add_absolute_pe(const Tensor& x, const PositionGrid& grid,
                                           const std::vector<int64_t>* positions) const {
  if (cfg_.pe != PeMode::absolute) return x;
  Tensor pe = absolute_pe(grid, cfg_.d_model);
  if (positions) pe = index_select(pe, 0, *positions);
  return add(x, pe);
}

Tensor EntropyTransformer::hyper_blocks(const std::vector<TransformerBlock>& blocks,
                                        const Tensor& x, const PositionGrid& grid) const {
  if (blocks.empty()) return x;
  const auto pos = grid_positions(grid);
  AttendOptions opt;
  opt.query_pos = &pos;
  opt.key_pos = &pos;
  opt.topk = cfg_.topk;
  Tensor h = add_absolute_pe(x, grid, nullptr);
  for (const auto& b : blocks) h = b.forward(h, Tensor(), opt);
  return h;
}

Tensor EntropyTransformer::hyper_encode(const Tensor& y) const {
  if (!cfg_.use_hyper) throw std::logic_error("hyper_encode: model has no hyperprior");
  if (y.rank() != 4 || y.dim(1) != cfg_.latent_channels || y.dim(2) % 4 || y.dim(3) % 4 ||
      y.dim(2) < 4 || y.dim(3) < 4) {
    throw ShapeError("hyper_encode: latents " + shape_str(y.shape()) +
                     " must be [B, C, H, W] with H, W positive multiples of 4");
  }
  int64_t h = y.dim(2), w = y.dim(3);
  const int64_t d = cfg_.d_model;
  Tensor x = henc_in_(image_to_tokens(y));
  for (int g = 0; g < kResolutions; ++g) {
    if (g > 0) {
      Tensor img = conv2d(edge_pad(tokens_to_image(x, h, w)), down_w_[g - 1], down_b_[g - 1], 2, 0, d);
      h /= 2;
      w /= 2;
      x = image_to_tokens(img);
    }
    x = hyper_blocks(henc_[g], x, PositionGrid(h, w));
  }
  return tokens_to_image(henc_out_(henc_norm_(x)), h, w);
}

Tensor EntropyTransformer::hyper_decode(const Tensor& zhat, int64_t latent_h,
                                        int64_t latent_w) const {
  if (!cfg_.use_hyper) throw std::logic_error("hyper_decode: model has no hyperprior");
  if (zhat.rank() != 4 || zhat.dim(1) != cfg_.hyper_channels || 4 * zhat.dim(2) != latent_h ||
      4 * zhat.dim(3) != latent_w) {
    throw ShapeError("hyper_decode: hyper-latents " + shape_str(zhat.shape()) +
                     " do not match a latent grid of " + std::to_string(latent_h) + "x" +
                     std::to_string(latent_w));
  }
  int64_t h = zhat.dim(2), w = zhat.dim(3);
  const int64_t d = cfg_.d_model;
  Tensor x = hdec_in_(image_to_tokens(zhat));
  for (int g = 0; g < kResolutions; ++g) {
    if (g > 0) {
      Tensor img = conv2d(edge_pad(tokens_to_image(x, h, w)), up_w_[g - 1], up_b_[g - 1], 1, 0, d);
      img = pixel_shuffle(img, 2);
      h *= 2;
      w *= 2;
      x = image_to_tokens(img);
    }
    x = hyper_blocks(hdec_[g], x, PositionGrid(h, w));
  }
  return hdec_norm_(x);
}

Tensor EntropyTransformer::embed_latents(const Tensor& yhat_tokens) const {
  if (!cfg_.use_context) throw std::logic_error("embed_latents: model has no context model");
  return embed_(yhat_tokens);
}

Tensor EntropyTransformer::context_features(const Tensor& yhat_tokens, const Tensor& hyper,
                                            const ContextPlan& plan, const PositionGrid& grid,
                                            AttentionTrace* trace) const {
  if (!cfg_.use_context) throw std::logic_error("context_features: model has no context model");
  if (yhat_tokens.rank() != 3 || yhat_tokens.dim(1) != grid.tokens() ||
      yhat_tokens.dim(2) != cfg_.latent_channels) {
    throw ShapeError("context_features: latents " + shape_str(yhat_tokens.shape()) +
                     " vs grid of " + std::to_string(grid.tokens()) + " tokens");
  }
  const int64_t b = yhat_tokens.dim(0), d = cfg_.d_model;
  const int64_t nq = static_cast<int64_t>(plan.queries.size());
  Tensor memory = add(Tensor::zeros({b, 1, d}), start_token_);
  if (!plan.keys.empty()) {
    Tensor emb = embed_(index_select(yhat_tokens, 1, plan.keys));
    emb = add_absolute_pe(emb, grid, &plan.keys);
    memory = concat({memory, emb}, 1);
  }
  Tensor x = add(Tensor::zeros({b, nq, d}), mask_token_);
  if (cfg_.use_hyper) {
    if (!hyper.defined() || hyper.dim(1) != grid.tokens()) {
      throw ShapeError("context_features: hyperprior features do not match the latent grid");
    }
    x = add(x, query_from_hyper_(index_select(hyper, 1, plan.queries)));
  }
  x = add_absolute_pe(x, grid, &plan.queries);

  const auto qpos = positions_of(grid, plan.queries, false);
  const auto kpos = positions_of(grid, plan.keys, true);
  AttendOptions opt;
  opt.mask = plan.mask.empty() ? nullptr : &plan.mask;
  opt.query_pos = &qpos;
  opt.key_pos = &kpos;
  opt.topk = cfg_.topk;
  opt.trace = trace;
  for (const auto& blk : ctx_) x = blk.forward(x, memory, opt);
  return ctx_norm_(x);
}

GaussianParams EntropyTransformer::predict_params(const Tensor& hyper, const Tensor& context) const {
  if (!hyper.defined() && !context.defined()) {
    throw std::invalid_argument("predict_params: need hyperprior or context features");
  }
  const Tensor& ref = hyper.defined() ? hyper : context;
  const Tensor h = hyper.defined() ? hyper : Tensor::zeros(ref.shape());
  const Tensor c = context.defined() ? context : Tensor::zeros(ref.shape());
  if (h.shape() != c.shape() || h.rank() != 3 || h.dim(2) != cfg_.d_model) {
    throw ShapeError("predict_params: hyperprior " + shape_str(h.shape()) + " and context " +
                     shape_str(c.shape()) + " are not aligned");
  }
  predict_calls_.value.fetch_add(1);
  const int64_t C = cfg_.latent_channels;
  const Tensor out = head2_(leaky_relu(head1_(concat({h, c}, -1))));
  GaussianParams p;
  p.mu = slice(out, -1, 0, C);
  p.sigma = add_scalar(softplus(slice(out, -1, C, C)), kSigmaFloor);
  return p;
}

Tensor EntropyTransformer::scatter_rows(const Tensor& rows, const std::vector<int64_t>& positions,
                                        int64_t n) {
  if (rows.rank() != 3 || rows.dim(1) != static_cast<int64_t>(positions.size())) {
    throw ShapeError("scatter_rows: rows " + shape_str(rows.shape()) + " vs " +
                     std::to_string(positions.size()) + " positions");
  }
  const Tensor padded = concat({Tensor::zeros({rows.dim(0), 1, rows.dim(2)}), rows}, 1);
  std::vector<int64_t> idx(static_cast<size_t>(n), 0);
  for (size_t i = 0; i < positions.size(); ++i) idx[positions[i]] = static_cast<int64_t>(i) + 1;
  return index_select(padded, 1, idx);
}

Tensor EntropyTransformer::zero_features(int64_t batch, int64_t tokens) const {
  return Tensor::zeros({batch, tokens, cfg_.d_model});
}

void EntropyTransformer::collect(const std::string& prefix, ParamList& out) {
  if (cfg_.use_hyper) {
    henc_in_.collect(prefix + ".henc.in", out);
    for (size_t g = 0; g < henc_.size(); ++g)
      for (size_t b = 0; b < henc_[g].size(); ++b)
        henc_[g][b].collect(prefix + ".henc.g" + std::to_string(g) + ".b" + std::to_string(b), out);
    for (size_t i = 0; i < down_w_.size(); ++i) {
      register_param(out, prefix + ".henc.down" + std::to_string(i) + ".weight", down_w_[i]);
      register_param(out, prefix + ".henc.down" + std::to_string(i) + ".bias", down_b_[i]);
    }
    henc_norm_.collect(prefix + ".henc.norm", out);
    henc_out_.collect(prefix + ".henc.out", out);
    hdec_in_.collect(prefix + ".hdec.in", out);
    for (size_t g = 0; g < hdec_.size(); ++g)
      for (size_t b = 0; b < hdec_[g].size(); ++b)
        hdec_[g][b].collect(prefix + ".hdec.g" + std::to_string(g) + ".b" + std::to_string(b), out);
    for (size_t i = 0; i < up_w_.size(); ++i) {
      register_param(out, prefix + ".hdec.up" + std::to_string(i) + ".weight", up_w_[i]);
      register_param(out, prefix + ".hdec.up" + std::to_string(i) + ".bias", up_b_[i]);
    }
    hdec_norm_.collect(prefix + ".hdec.norm", out);
  }
  if (cfg_.use_context) {
    embed_.collect(prefix + ".ctx.embed", out);
    if (cfg_.use_hyper) query_from_hyper_.collect(prefix + ".ctx.query", out);
    register_param(out, prefix + ".ctx.start_token", start_token_);
    register_param(out, prefix + ".ctx.mask_token", mask_token_);
    for (size_t l = 0; l < ctx_.size(); ++l) ctx_[l].collect(prefix + ".ctx.l" + std::to_string(l), out);
    ctx_norm_.collect(prefix + ".ctx.norm", out);
  }
  head1_.collect(prefix + ".head1", out);
  head2_.collect(prefix + ".head2", out);
}

}  // namespace tfc
