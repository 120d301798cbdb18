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

// The complete compression model: transforms, transformer entropy model and
// the factorized hyper-latent density, plus checkpoint I/O.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfc/autoencoder.hpp"
#include "tfc/config_file.hpp"
#include "tfc/entropy_model.hpp"
#include "tfc/entropy_transformer.hpp"
#include "tfc/random.hpp"

namespace tfc {

enum class CodecMode { serial, parallel };
const char* codec_mode_name(CodecMode mode);
CodecMode parse_codec_mode(const std::string& name);

struct ModelConfig {
  int64_t ae_channels = 48;
  EntropyConfig entropy;
  CodecMode mode = CodecMode::serial;  // mask regime the model is trained for
  bool bidirectional = true;           // pass-2 context in parallel mode
  double lambda = 0.02;

  void validate() const;
  KeyValues to_kv() const;
  static ModelConfig from_kv(const KeyValues& kv);  // missing keys keep defaults
};

/// How context features are produced.
enum class ContextRegime {
  serial,        // raster-causal
  parallel,      // slice 1 without context, slice 2 from pass 2
  random_mask,   // raster-causal minus a random subset of corrupted latents
  custom,        // caller-supplied plan whose queries are all positions in order
};

struct EntropyOptions {
  ContextRegime regime = ContextRegime::serial;
  bool bidirectional = true;  // parallel regime only
  bool training = false;      // additive noise + straight-through rounding
  // Training only: when false, the noisy values also feed the context model
  // and the hyper decoder, which makes the loss smooth in every input.
  bool straight_through = true;
  double mask_ratio = 0.5;    // random_mask regime
  const ContextPlan* plan = nullptr;  // custom regime
};

struct EntropyForward {
  Tensor latent_probs;  // [B, n, C]
  Tensor hyper_probs;   // [B, Cz, h, w]; undefined without hyperprior
  GaussianParams params;
  std::vector<uint8_t> corrupted;  // random_mask regime, [B * n]
};

class CompressionModel {
 public:
  CompressionModel() = default;
  CompressionModel(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const Autoencoder& autoencoder() const { return ae_; }
  const EntropyTransformer& entropy() const { return em_; }
  const FactorizedDensity& hyper_density() const { return fd_; }

  /// Rates for latents y [B, C, H, W] (H, W multiples of 4). The rng is only
  /// used for training noise and random masks.
  EntropyForward entropy_forward(const Tensor& y, const EntropyOptions& opt, Rng* rng) const;

  // Every trainable tensor, in a fixed order.
  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  // Only the entropy-model tensors (transformer and hyper density).
  ParamList entropy_params() const;

  /// FNV-1a 64 over the config and every parameter value.
  uint64_t hash() const;

  void save(const std::string& path) const;
  static CompressionModel load(const std::string& path);
  // Copies the values of a compatible model's tensors into this one.
  void copy_params_from(const CompressionModel& other);

 private:
  ModelConfig cfg_;
  Autoencoder ae_;
  EntropyTransformer em_;
  FactorizedDensity fd_;
  ParamList params_;
};

/// Parameter tensors copied by value, for snapshots.
std::vector<std::vector<double>> snapshot(const ParamList& params);

}  // namespace tfc
