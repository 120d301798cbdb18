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

// Small configurations shared by the unit tests.

#pragma once

#include "tfc/model.hpp"

namespace tfc::testing {

inline ModelConfig tiny_model(bool hyper = true, bool context = true) {
  ModelConfig m;
  m.ae_channels = 8;
  m.entropy.d_model = 16;
  m.entropy.heads = 2;
  m.entropy.hyper_depth = 1;
  m.entropy.context_depth = 2;
  m.entropy.latent_channels = 4;
  m.entropy.hyper_channels = 2;
  m.entropy.topk = 8;
  m.entropy.rpe_h = 2;
  m.entropy.use_hyper = hyper;
  m.entropy.use_context = context;
  return m;
}

}  // namespace tfc::testing
