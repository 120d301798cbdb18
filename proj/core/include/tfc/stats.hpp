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

// Small statistics helpers for the experiment reports.

#pragma once

#include <vector>

namespace tfc {

/// Ranks starting at 1; ties share their average rank.
std::vector<double> average_ranks(const std::vector<double>& v);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, Student-t approximation
  int n = 0;
};
/// Spearman rank correlation. Needs at least 3 points.
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double median(std::vector<double> v);

}  // namespace tfc
