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

#include "tfc/grad_check.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tfc {

namespace {

double eval_scalar(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  const Tensor y = f();
  const double v = y.item();
  if (!std::isfinite(v)) throw std::domain_error("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  double step, double eps) {
  PrecisionScope f64(Precision::f64);
  for (auto& p : params) {
    p.zero_grad();
    p.set_requires_grad(true);
  }
  {
    const Tensor y = f();
    if (!std::isfinite(y.item())) throw std::domain_error("grad_check: function value is not finite");
    backward(y);
  }
  GradCheckReport rep;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<double> analytic(static_cast<size_t>(p.numel()), 0.0);
    if (p.has_grad()) analytic.assign(p.grad().begin(), p.grad().end());
    auto data = p.mutable_data();
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double fp = eval_scalar(f);
      data[i] = saved - step;
      const double fm = eval_scalar(f);
      data[i] = saved;
      const double num = (fp - fm) / (2.0 * step);
      const double a = analytic[i];
      const double err = std::fabs(a - num) / (std::fabs(a) + std::fabs(num) + eps);
      if (err > rep.max_rel_error || rep.worst_index < 0) {
        rep.max_rel_error = std::max(rep.max_rel_error, err);
        rep.worst_param = pi;
        rep.worst_index = i;
        rep.analytic = a;
        rep.numeric = num;
      }
    }
  }
  return rep;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double step,
                  double eps) {
  Tensor leaf = x.detach();
  return grad_check_params([&] { return f(leaf); }, {leaf}, step, eps).max_rel_error;
}

}  // namespace tfc
