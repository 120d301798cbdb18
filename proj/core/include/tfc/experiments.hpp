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

// Toy-scale studies: entropy models trained on frozen latents from a base
// model, compared on held-out latents.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfc/model.hpp"
#include "tfc/stats.hpp"
#include "tfc/trainer.hpp"

namespace tfc {

struct LatentData {
  Tensor train;    // [N, C, h, w], continuous analysis output
  Tensor heldout;  // [M, C, h, w]
};

/// Runs the analysis transform of base over images (extents multiples of 16).
Tensor analysis_latents(const CompressionModel& base, const std::vector<Tensor>& images);
/// Latents of synthetic images; training and held-out images come from
/// disjoint seeds.
LatentData make_latent_data(const CompressionModel& base, int64_t n_train, int64_t n_heldout,
                            int64_t image_size, uint64_t seed);

/// Ideal code lengths of rounded latents under a model (hard quantization,
/// 64-bit, no tape).
struct RateReport {
  int64_t samples = 0;
  int64_t tokens = 0;         // latent positions per sample
  double pixels = 0.0;        // image pixels per sample
  std::vector<double> bits;   // [samples * tokens], summed over channels
  double hyper_bits = 0.0;    // all samples
  double latent_bpp() const;
  double hyper_bpp() const;
  double bpp() const { return latent_bpp() + hyper_bpp(); }
  /// Latent bpp counting only the listed positions.
  double subset_bpp(const std::vector<int64_t>& positions) const;
};
RateReport evaluate_rates(const CompressionModel& model, const Tensor& latents,
                          const EntropyOptions& opt, uint64_t seed = 0);

struct StudySetup {
  ModelConfig model;   // template; variants override fields
  TrainConfig train;   // steps, batch, lr, seed
  std::vector<uint64_t> seeds{1};  // paired runs, averaged
};

/// Trains the entropy model of a fresh CompressionModel(cfg, seed) on
/// latents.
CompressionModel train_entropy_model(const ModelConfig& cfg, uint64_t seed, const Tensor& latents,
                                     const TrainConfig& tc, const StepSpec& spec,
                                     int64_t* nonfinite_runs = nullptr);

struct StudyRow {
  std::string variant;
  double bpp = 0.0;         // mean over seeds, evaluation regime of the variant
  double slice2_bpp = 0.0;  // parallel variants: latent bpp of slice 2 only
  int64_t nonfinite = 0;    // runs aborted by NonFiniteError
  std::vector<double> per_seed;
};

/// no-PE, absolute, 2D relative and diamond relative PE.
std::vector<StudyRow> ablate_pe(const StudySetup& setup, const LatentData& data,
                                const std::vector<PeMode>& modes);
/// One row per k (0 = dense).
std::vector<StudyRow> ablate_topk(const StudySetup& setup, const LatentData& data,
                                  const std::vector<int64_t>& ks);
/// hyperprior-only, context-only, joint serial, parallel unidirectional,
/// parallel bidirectional.
std::vector<StudyRow> ablate_context(const StudySetup& setup, const LatentData& data);

struct PositionImpact {
  std::vector<Offset> offsets;
  std::vector<double> delta_percent;  // latent rate increase when the offset is hidden
  Correlation vs_distance;            // Spearman of delta against l1 distance
};
/// Hides, for every query, the single key at query + offset and measures the
/// latent rate increase against full causal context. Offsets cover the
/// causal half of the (2r+1)^2 window.
PositionImpact position_impact(const CompressionModel& model, const Tensor& latents, int64_t radius);

}  // namespace tfc
