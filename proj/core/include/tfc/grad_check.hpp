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

#include <functional>
#include <vector>

#include "tfc/tensor.hpp"

namespace tfc {

struct GradCheckReport {
  double max_rel_error = 0.0;
  size_t worst_param = 0;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares the tape gradient of a scalar function against central
// differences, coordinate by coordinate. The per-coordinate error is
// |a - n| / (|a| + |n| + eps). Throws std::domain_error if f is not finite at
// the evaluation point.
//
// `params` are perturbed in place and restored; f must rebuild its graph from
// them on every call.
GradCheckReport grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  double step = 1e-5, double eps = 1e-6);

// Single-input form: returns the max relative error.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double step = 1e-5, double eps = 1e-6);

}  // namespace tfc
