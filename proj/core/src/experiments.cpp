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

#include "tfc/experiments.hpp"

#include <cmath>
#include <numeric>

#include "tfc/corpus.hpp"
#include "tfc/entropy_model.hpp"
#include "tfc/ops.hpp"

namespace tfc {

namespace {

constexpr int64_t kEvalChunk = 16;

double log2_sum(std::span<const double> p, size_t begin, size_t count) {
  double s = 0.0;
  for (size_t i = begin; i < begin + count; ++i) s -= std::log2(p[i]);
  return s;
}

}  // namespace

Tensor analysis_latents(const CompressionModel& base, const std::vector<Tensor>& images) {
  NoGradGuard ng;
  PrecisionScope f64(Precision::f64);
  std::vector<Tensor> ys;
  for (const auto& x : images) ys.push_back(base.autoencoder().encode(x));
  return stack_batch(ys);
}

LatentData make_latent_data(const CompressionModel& base, int64_t n_train, int64_t n_heldout,
                            int64_t image_size, uint64_t seed) {
  LatentData d;
  d.train = analysis_latents(base, synthetic_set(n_train, image_size, image_size, seed));
  d.heldout = analysis_latents(base, synthetic_set(n_heldout, image_size, image_size, seed + 0x5eedULL));
  return d;
}

double RateReport::latent_bpp() const {
  return std::accumulate(bits.begin(), bits.end(), 0.0) / (pixels * static_cast<double>(samples));
}

double RateReport::hyper_bpp() const { return hyper_bits / (pixels * static_cast<double>(samples)); }

double RateReport::subset_bpp(const std::vector<int64_t>& positions) const {
  double s = 0.0;
  for (int64_t b = 0; b < samples; ++b)
    for (int64_t p : positions) s += bits[b * tokens + p];
  return s / (pixels * static_cast<double>(samples));
}

RateReport evaluate_rates(const CompressionModel& model, const Tensor& latents,
                          const EntropyOptions& opt, uint64_t seed) {
  NoGradGuard ng;
  PrecisionScope f64(Precision::f64);
  if (latents.rank() != 4) throw ShapeError("evaluate_rates: latents must be [N, C, h, w]");
  EntropyOptions eval = opt;
  eval.training = false;
  Rng rng(seed);
  RateReport r;
  r.samples = latents.dim(0);
  r.tokens = latents.dim(2) * latents.dim(3);
  r.pixels = 256.0 * static_cast<double>(r.tokens);
  const int64_t C = latents.dim(1);
  for (int64_t b0 = 0; b0 < r.samples; b0 += kEvalChunk) {
    const int64_t nb = std::min(kEvalChunk, r.samples - b0);
    const EntropyForward f = model.entropy_forward(slice(latents, 0, b0, nb), eval, &rng);
    const auto p = f.latent_probs.data();
    for (int64_t i = 0; i < nb * r.tokens; ++i) {
      r.bits.push_back(log2_sum(p, static_cast<size_t>(i * C), static_cast<size_t>(C)));
    }
    if (f.hyper_probs.defined()) r.hyper_bits += log2_sum(f.hyper_probs.data(), 0, f.hyper_probs.data().size());
  }
  return r;
}

CompressionModel train_entropy_model(const ModelConfig& cfg, uint64_t seed, const Tensor& latents,
                                     const TrainConfig& tc, const StepSpec& spec,
                                     int64_t* nonfinite_runs) {
  CompressionModel model(cfg, seed);
  TrainConfig t = tc;
  t.seed = seed;
  try {
    train_entropy(model, latents, t, spec);
  } catch (const NonFiniteError&) {
    if (!nonfinite_runs) throw;
    ++*nonfinite_runs;
  }
  return model;
}

namespace {

StepSpec spec_for(const ModelConfig& cfg, const TrainConfig& tc) {
  StepSpec s;
  s.regime = cfg.mode == CodecMode::serial ? ContextRegime::serial : ContextRegime::parallel;
  s.bidirectional = cfg.bidirectional;
  s.lambda = tc.lambda;
  s.mask_ratio = tc.mask_ratio;
  return s;
}

EntropyOptions eval_options(const ModelConfig& cfg) {
  EntropyOptions o;
  o.regime = cfg.mode == CodecMode::serial ? ContextRegime::serial : ContextRegime::parallel;
  o.bidirectional = cfg.bidirectional;
  return o;
}

StudyRow run_variant(const std::string& name, const ModelConfig& cfg, const StudySetup& setup,
                     const LatentData& data) {
  StudyRow row;
  row.variant = name;
  for (uint64_t seed : setup.seeds) {
    const CompressionModel m =
        train_entropy_model(cfg, seed, data.train, setup.train, spec_for(cfg, setup.train), &row.nonfinite);
    const RateReport r = evaluate_rates(m, data.heldout, eval_options(cfg));
    row.per_seed.push_back(r.bpp());
    if (cfg.mode == CodecMode::parallel) {
      const PositionGrid grid(data.heldout.dim(2), data.heldout.dim(3));
      row.slice2_bpp += r.subset_bpp(slice_positions(grid, 2)) / static_cast<double>(setup.seeds.size());
    }
  }
  row.bpp = mean(row.per_seed);
  return row;
}

}  // namespace

std::vector<StudyRow> ablate_pe(const StudySetup& setup, const LatentData& data,
                                const std::vector<PeMode>& modes) {
  std::vector<StudyRow> rows;
  for (PeMode mode : modes) {
    ModelConfig cfg = setup.model;
    cfg.entropy.pe = mode;
    rows.push_back(run_variant(pe_mode_name(mode), cfg, setup, data));
  }
  return rows;
}

std::vector<StudyRow> ablate_topk(const StudySetup& setup, const LatentData& data,
                                  const std::vector<int64_t>& ks) {
  std::vector<StudyRow> rows;
  for (int64_t k : ks) {
    ModelConfig cfg = setup.model;
    cfg.entropy.topk = k;
    rows.push_back(run_variant(k == 0 ? "dense" : "k=" + std::to_string(k), cfg, setup, data));
  }
  return rows;
}

std::vector<StudyRow> ablate_context(const StudySetup& setup, const LatentData& data) {
  std::vector<StudyRow> rows;
  ModelConfig hyper_only = setup.model;
  hyper_only.entropy.use_context = false;
  hyper_only.mode = CodecMode::serial;
  rows.push_back(run_variant("hyperprior-only", hyper_only, setup, data));

  ModelConfig context_only = setup.model;
  context_only.entropy.use_hyper = false;
  context_only.mode = CodecMode::serial;
  rows.push_back(run_variant("context-only", context_only, setup, data));

  ModelConfig joint = setup.model;
  joint.mode = CodecMode::serial;
  rows.push_back(run_variant("joint-serial", joint, setup, data));

  ModelConfig uni = setup.model;
  uni.mode = CodecMode::parallel;
  uni.bidirectional = false;
  rows.push_back(run_variant("parallel-unidirectional", uni, setup, data));

  ModelConfig bi = uni;
  bi.bidirectional = true;
  rows.push_back(run_variant("parallel-bidirectional", bi, setup, data));
  return rows;
}

PositionImpact position_impact(const CompressionModel& model, const Tensor& latents, int64_t radius) {
  if (radius < 1) throw std::invalid_argument("position_impact: radius must be >= 1");
  const PositionGrid grid(latents.dim(2), latents.dim(3));
  EntropyOptions full;
  full.regime = ContextRegime::serial;
  const double base = evaluate_rates(model, latents, full).latent_bpp();
  PositionImpact out;
  std::vector<double> dist;
  for (int64_t dy = -radius; dy <= 0; ++dy) {
    for (int64_t dx = -radius; dx <= radius; ++dx) {
      if (dy == 0 && dx >= 0) break;  // keys must precede the query
      const Offset off{dy, dx};
      const ContextPlan plan = drop_offset_plan(grid, off);
      EntropyOptions o;
      o.regime = ContextRegime::custom;
      o.plan = &plan;
      const double bpp = evaluate_rates(model, latents, o).latent_bpp();
      out.offsets.push_back(off);
      out.delta_percent.push_back(100.0 * (bpp - base) / base);
      dist.push_back(static_cast<double>(std::abs(dy) + std::abs(dx)));
    }
  }
  out.vs_distance = spearman(dist, out.delta_percent);
  return out;
}

}  // namespace tfc
