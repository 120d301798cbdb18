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

#include "tfc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
  throw ShapeError(std::string(op) + ": " + what);
}

[[noreturn]] void shape_fail2(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

const Node& parent(const Node& n, size_t i) { return *n.parents[i]; }
Node& parent_mut(Node& n, size_t i) { return *n.parents[i]; }

int64_t norm_axis(const char* op, int64_t axis, int64_t rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) shape_fail(op, "axis out of range");
  return axis;
}

// -- elementwise plumbing ------------------------------------------------------

template <typename F, typename GA, typename GB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, GA ga, GB gb) {
  Shape out_shape;
  if (is_suffix(b.shape(), a.shape())) {
    out_shape = a.shape();
  } else if (is_suffix(a.shape(), b.shape())) {
    out_shape = b.shape();
  } else {
    shape_fail2(op, a.shape(), b.shape());
  }
  const auto ad = a.data();
  const auto bd = b.data();
  const size_t na = ad.size(), nb = bd.size();
  const size_t n = static_cast<size_t>(numel_of(out_shape));
  std::vector<double> out(n);
  if (na == n && nb == n) {
    for (size_t i = 0; i < n; ++i) out[i] = f(ad[i], bd[i]);
  } else {
    for (size_t i = 0; i < n; ++i) out[i] = f(ad[i % na], bd[i % nb]);
  }
  return make_result(op, out_shape, std::move(out), {a, b}, [ga, gb](Node& self) {
    const Node& pa = parent(self, 0);
    const Node& pb = parent(self, 1);
    const size_t n = self.data.size();
    const size_t na = pa.data.size(), nb = pb.data.size();
    if (pa.requires_grad) {
      auto& g = parent_mut(self, 0).grad_buffer();
      for (size_t i = 0; i < n; ++i) {
        g[i % na] += self.grad[i] * ga(pa.data[i % na], pb.data[i % nb], self.data[i]);
      }
    }
    if (pb.requires_grad) {
      auto& g = parent_mut(self, 1).grad_buffer();
      for (size_t i = 0; i < n; ++i) {
        g[i % nb] += self.grad[i] * gb(pa.data[i % na], pb.data[i % nb], self.data[i]);
      }
    }
  });
}

template <typename F, typename DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df) {
  const auto ad = a.data();
  std::vector<double> out(ad.size());
  for (size_t i = 0; i < ad.size(); ++i) out[i] = f(ad[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [df](Node& self) {
    Node& p = parent_mut(self, 0);
    auto& g = p.grad_buffer();
    for (size_t i = 0; i < self.data.size(); ++i) g[i] += self.grad[i] * df(p.data[i], self.data[i]);
  });
}

}  // namespace

// -- gemm ----------------------------------------------------------------------

void gemm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
          bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  int64_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double* bk = b + kk * n;
      const double v0 = a0[kk], v1 = a1[kk], v2 = a2[kk], v3 = a3[kk];
      for (int64_t j = 0; j < n; ++j) {
        const double bv = bk[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double* bk = b + kk * n;
      const double v = ai[kk];
      for (int64_t j = 0; j < n; ++j) ci[j] += v * bk[j];
    }
  }
}

namespace {

std::vector<double> transposed(const double* src, int64_t rows, int64_t cols) {
  std::vector<double> t(static_cast<size_t>(rows * cols));
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) t[c * rows + r] = src[r * cols + c];
  return t;
}

}  // namespace

// -- elementwise binary --------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary(
      "mul_scalar", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

// -- elementwise unary ---------------------------------------------------------

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
  return unary(
      "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
  return unary(
      "softplus", a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(
      "leaky_relu", a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      "gelu", a, [](double x) { return x * 0.5 * std::erfc(-x * kInvSqrt2); },
      [](double x, double) {
        return 0.5 * std::erfc(-x * kInvSqrt2) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

Tensor erf(const Tensor& a) {
  return unary(
      "erf", a, [](double x) { return std::erf(x); },
      [](double x, double) { return 1.1283791670955125739 * std::exp(-x * x); });
}

Tensor normal_cdf(const Tensor& a) {
  return unary(
      "normal_cdf", a, [](double x) { return 0.5 * std::erfc(-x * kInvSqrt2); },
      [](double x, double) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); });
}

Tensor clamp_min(const Tensor& a, double lo) {
  return unary(
      "clamp_min", a, [lo](double x) { return x < lo ? lo : x; },
      [lo](double x, double) { return x < lo ? 0.0 : 1.0; });
}

Tensor lower_bound(const Tensor& a, double lo) {
  const auto ad = a.data();
  std::vector<double> out(ad.size());
  for (size_t i = 0; i < ad.size(); ++i) out[i] = ad[i] < lo ? lo : ad[i];
  return make_result("lower_bound", a.shape(), std::move(out), {a}, [lo](Node& self) {
    Node& p = parent_mut(self, 0);
    auto& g = p.grad_buffer();
    for (size_t i = 0; i < self.data.size(); ++i) {
      // A negative incoming gradient means descent would raise the value.
      if (p.data[i] >= lo || self.grad[i] < 0) g[i] += self.grad[i];
    }
  });
}

// -- reductions ----------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("sum", {}, {s}, {a}, [](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    const double gv = self.grad[0];
    for (auto& v : g) v += gv;
  });
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  if (n == 0) shape_fail("mean", "empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("mean", {}, {s / n}, {a}, [n](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    const double gv = self.grad[0] / n;
    for (auto& v : g) v += gv;
  });
}

namespace {

Tensor reduce_last(const char* op, const Tensor& a, double scale) {
  if (a.rank() == 0) shape_fail(op, "needs rank >= 1");
  const int64_t cols = a.dim(-1);
  const int64_t rows = cols ? a.numel() / cols : 0;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  const auto ad = a.data();
  std::vector<double> out(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int64_t c = 0; c < cols; ++c) s += ad[r * cols + c];
    out[r] = s * scale;
  }
  return make_result(op, out_shape, std::move(out), {a}, [rows, cols, scale](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    for (int64_t r = 0; r < rows; ++r) {
      const double gv = self.grad[r] * scale;
      for (int64_t c = 0; c < cols; ++c) g[r * cols + c] += gv;
    }
  });
}

}  // namespace

Tensor sum_last(const Tensor& a) { return reduce_last("sum_last", a, 1.0); }

Tensor mean_last(const Tensor& a) {
  if (a.rank() == 0 || a.dim(-1) == 0) shape_fail("mean_last", "empty last axis");
  return reduce_last("mean_last", a, 1.0 / static_cast<double>(a.dim(-1)));
}

// -- shape ---------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  int64_t infer = -1;
  int64_t known = 1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) shape_fail("reshape", "more than one inferred extent");
      infer = static_cast<int64_t>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || a.numel() % known) shape_fail2("reshape", a.shape(), shape);
    shape[infer] = a.numel() / known;
  }
  if (numel_of(shape) != a.numel()) shape_fail2("reshape", a.shape(), shape);
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<int64_t>& perm) {
  const Shape& in = a.shape();
  const size_t r = in.size();
  if (perm.size() != r) shape_fail("permute", "permutation rank mismatch for " + shape_str(in));
  std::vector<int64_t> seen(r, 0);
  for (int64_t p : perm) {
    if (p < 0 || p >= static_cast<int64_t>(r) || seen[p]++) shape_fail("permute", "invalid permutation");
  }
  Shape out_shape(r);
  std::vector<int64_t> in_stride(r, 1);
  for (size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  for (size_t i = 0; i < r; ++i) out_shape[i] = in[perm[i]];
  const int64_t n = a.numel();
  auto src = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n));
  std::vector<int64_t> idx(r, 0);
  for (int64_t o = 0; o < n; ++o) {
    int64_t off = 0;
    for (size_t i = 0; i < r; ++i) off += idx[i] * in_stride[perm[i]];
    (*src)[o] = off;
    for (size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  const auto ad = a.data();
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t o = 0; o < n; ++o) out[o] = ad[(*src)[o]];
  return make_result("permute", out_shape, std::move(out), {a}, [src](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    for (size_t o = 0; o < src->size(); ++o) g[(*src)[o]] += self.grad[o];
  });
}

Tensor transpose(const Tensor& a, int64_t axis0, int64_t axis1) {
  const int64_t r = a.rank();
  axis0 = norm_axis("transpose", axis0, r);
  axis1 = norm_axis("transpose", axis1, r);
  std::vector<int64_t> perm(static_cast<size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[axis0], perm[axis1]);
  return permute(a, perm);
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  if (parts.empty()) shape_fail("concat", "no inputs");
  const Shape& s0 = parts[0].shape();
  const int64_t r = static_cast<int64_t>(s0.size());
  axis = norm_axis("concat", axis, r);
  int64_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (static_cast<int64_t>(s.size()) != r) shape_fail2("concat", s0, s);
    for (int64_t i = 0; i < r; ++i) {
      if (i != axis && s[i] != s0[i]) shape_fail2("concat", s0, s);
    }
    total += s[axis];
  }
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s0[i];
  for (int64_t i = axis + 1; i < r; ++i) inner *= s0[i];
  Shape out_shape = s0;
  out_shape[axis] = total;
  std::vector<double> out(static_cast<size_t>(outer * total * inner));
  auto lens = std::make_shared<std::vector<int64_t>>();
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t len = p.dim(axis);
    lens->push_back(len);
    const auto pd = p.data();
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(pd.begin() + o * len * inner, len * inner,
                  out.begin() + (o * total + off) * inner);
    }
    off += len;
  }
  return make_result("concat", out_shape, std::move(out), parts,
                     [lens, outer, inner, total](Node& self) {
                       int64_t off = 0;
                       for (size_t pi = 0; pi < lens->size(); ++pi) {
                         const int64_t len = (*lens)[pi];
                         Node& p = parent_mut(self, pi);
                         if (p.requires_grad) {
                           auto& g = p.grad_buffer();
                           for (int64_t o = 0; o < outer; ++o) {
                             for (int64_t i = 0; i < len * inner; ++i) {
                               g[o * len * inner + i] += self.grad[(o * total + off) * inner + i];
                             }
                           }
                         }
                         off += len;
                       }
                     });
}

Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t length) {
  const Shape& s = a.shape();
  const int64_t r = static_cast<int64_t>(s.size());
  axis = norm_axis("slice", axis, r);
  if (start < 0 || length < 0 || start + length > s[axis]) {
    shape_fail("slice", "range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                            ") outside axis of " + shape_str(s));
  }
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s[i];
  for (int64_t i = axis + 1; i < r; ++i) inner *= s[i];
  const int64_t full = s[axis];
  Shape out_shape = s;
  out_shape[axis] = length;
  const auto ad = a.data();
  std::vector<double> out(static_cast<size_t>(outer * length * inner));
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(ad.begin() + (o * full + start) * inner, length * inner,
                out.begin() + o * length * inner);
  }
  return make_result("slice", out_shape, std::move(out), {a},
                     [outer, inner, full, start, length](Node& self) {
                       auto& g = parent_mut(self, 0).grad_buffer();
                       for (int64_t o = 0; o < outer; ++o) {
                         for (int64_t i = 0; i < length * inner; ++i) {
                           g[(o * full + start) * inner + i] += self.grad[o * length * inner + i];
                         }
                       }
                     });
}

Tensor index_select(const Tensor& a, int64_t axis, const std::vector<int64_t>& index) {
  const Shape& s = a.shape();
  const int64_t r = static_cast<int64_t>(s.size());
  axis = norm_axis("index_select", axis, r);
  const int64_t full = s[axis];
  for (int64_t v : index) {
    if (v < 0 || v >= full) shape_fail("index_select", "index out of range for " + shape_str(s));
  }
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s[i];
  for (int64_t i = axis + 1; i < r; ++i) inner *= s[i];
  const int64_t m = static_cast<int64_t>(index.size());
  Shape out_shape = s;
  out_shape[axis] = m;
  const auto ad = a.data();
  std::vector<double> out(static_cast<size_t>(outer * m * inner));
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < m; ++j)
      std::copy_n(ad.begin() + (o * full + index[j]) * inner, inner,
                  out.begin() + (o * m + j) * inner);
  auto ip = std::make_shared<std::vector<int64_t>>(index);
  return make_result("index_select", out_shape, std::move(out), {a},
                     [ip, outer, inner, full](Node& self) {
                       auto& g = parent_mut(self, 0).grad_buffer();
                       const int64_t m = static_cast<int64_t>(ip->size());
                       for (int64_t o = 0; o < outer; ++o)
                         for (int64_t j = 0; j < m; ++j)
                           for (int64_t i = 0; i < inner; ++i)
                             g[(o * full + (*ip)[j]) * inner + i] += self.grad[(o * m + j) * inner + i];
                     });
}

// -- matmul --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) shape_fail2("matmul", sa, sb);
  const int64_t m = sa[sa.size() - 2], k = sa.back();
  const int64_t kb = sb[sb.size() - 2], n = sb.back();
  if (k != kb) shape_fail2("matmul", sa, sb);
  const bool shared_b = sb.size() == 2;
  if (!shared_b && (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()))) {
    shape_fail2("matmul", sa, sb);
  }
  const int64_t batch = a.numel() / std::max<int64_t>(m * k, 1);
  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(static_cast<size_t>(batch * m * n));
  if (shared_b) {
    gemm(ad.data(), bd.data(), out.data(), batch * m, k, n, false);
  } else {
    for (int64_t i = 0; i < batch; ++i) {
      gemm(ad.data() + i * m * k, bd.data() + i * k * n, out.data() + i * m * n, m, k, n, false);
    }
  }
  return make_result("matmul", out_shape, std::move(out), {a, b},
                     [batch, m, k, n, shared_b](Node& self) {
                       Node& pa = parent_mut(self, 0);
                       Node& pb = parent_mut(self, 1);
                       if (shared_b) {
                         if (pa.requires_grad) {
                           auto bt = transposed(pb.data.data(), k, n);
                           gemm(self.grad.data(), bt.data(), pa.grad_buffer().data(), batch * m, n,
                                k, true);
                         }
                         if (pb.requires_grad) {
                           auto at = transposed(pa.data.data(), batch * m, k);
                           gemm(at.data(), self.grad.data(), pb.grad_buffer().data(), k, batch * m,
                                n, true);
                         }
                         return;
                       }
                       for (int64_t i = 0; i < batch; ++i) {
                         const double* gi = self.grad.data() + i * m * n;
                         if (pa.requires_grad) {
                           auto bt = transposed(pb.data.data() + i * k * n, k, n);
                           gemm(gi, bt.data(), pa.grad_buffer().data() + i * m * k, m, n, k, true);
                         }
                         if (pb.requires_grad) {
                           auto at = transposed(pa.data.data() + i * m * k, m, k);
                           gemm(at.data(), gi, pb.grad_buffer().data() + i * k * n, k, m, n, true);
                         }
                       }
                     });
}

// -- attention primitives ------------------------------------------------------

Tensor mask_fill(const Tensor& a, const std::vector<uint8_t>& keep, const Shape& keep_shape,
                 double fill) {
  if (!is_suffix(keep_shape, a.shape())) shape_fail2("mask_fill", a.shape(), keep_shape);
  if (numel_of(keep_shape) != static_cast<int64_t>(keep.size())) {
    shape_fail("mask_fill", "mask data does not match mask shape " + shape_str(keep_shape));
  }
  const auto ad = a.data();
  const size_t nk = keep.size();
  std::vector<double> out(ad.size());
  for (size_t i = 0; i < ad.size(); ++i) out[i] = keep[i % nk] ? ad[i] : fill;
  auto kp = std::make_shared<std::vector<uint8_t>>(keep);
  return make_result("mask_fill", a.shape(), std::move(out), {a}, [kp](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    const size_t nk = kp->size();
    for (size_t i = 0; i < g.size(); ++i) {
      if ((*kp)[i % nk]) g[i] += self.grad[i];
    }
  });
}

Tensor topk_filter(const Tensor& a, int64_t k) {
  if (k < 1) shape_fail("topk_filter", "k must be >= 1");
  if (a.rank() == 0) shape_fail("topk_filter", "needs rank >= 1");
  const int64_t cols = a.dim(-1);
  const int64_t rows = cols ? a.numel() / cols : 0;
  const auto ad = a.data();
  std::vector<double> out(ad.begin(), ad.end());
  auto kept = std::make_shared<std::vector<uint8_t>>(ad.size(), 1);
  if (k < cols) {
    std::vector<int64_t> order(static_cast<size_t>(cols));
    for (int64_t r = 0; r < rows; ++r) {
      const double* row = ad.data() + r * cols;
      std::iota(order.begin(), order.end(), 0);
      std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                       [row](int64_t x, int64_t y) {
                         return row[x] > row[y] || (row[x] == row[y] && x < y);
                       });
      const int64_t pivot = order[k - 1];
      const double pv = row[pivot];
      for (int64_t c = 0; c < cols; ++c) {
        const bool in_top = row[c] > pv || (row[c] == pv && c <= pivot);
        if (!in_top) {
          out[r * cols + c] = -kInf;
          (*kept)[r * cols + c] = 0;
        }
      }
    }
  }
  return make_result("topk_filter", a.shape(), std::move(out), {a}, [kept](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    for (size_t i = 0; i < g.size(); ++i) {
      if ((*kept)[i]) g[i] += self.grad[i];
    }
  });
}

Tensor softmax(const Tensor& a, bool allow_empty_rows) {
  if (a.rank() == 0) shape_fail("softmax", "needs rank >= 1");
  const int64_t cols = a.dim(-1);
  const int64_t rows = cols ? a.numel() / cols : 0;
  const auto ad = a.data();
  std::vector<double> out(ad.size(), 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = ad.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = -kInf;
    for (int64_t c = 0; c < cols; ++c) mx = std::max(mx, x[c]);
    if (mx == -kInf) {
      if (!allow_empty_rows) {
        throw std::domain_error("softmax: row " + std::to_string(r) +
                                " has no finite entry (fully masked query)");
      }
      continue;
    }
    double s = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      y[c] = x[c] == -kInf ? 0.0 : std::exp(x[c] - mx);
      s += y[c];
    }
    const double inv = 1.0 / s;
    for (int64_t c = 0; c < cols; ++c) y[c] *= inv;
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [rows, cols](Node& self) {
    auto& g = parent_mut(self, 0).grad_buffer();
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (int64_t c = 0; c < cols; ++c) dot += y[c] * dy[c];
      for (int64_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot);
    }
  });
}

Tensor take_along_last(const Tensor& a, const std::vector<int32_t>& index, int64_t cols) {
  if (a.rank() < 2) shape_fail("take_along_last", "needs rank >= 2, got " + shape_str(a.shape()));
  const int64_t rows = a.dim(-2);
  const int64_t table = a.dim(-1);
  if (static_cast<int64_t>(index.size()) != rows * cols) {
    shape_fail("take_along_last", "index table size " + std::to_string(index.size()) +
                                      " does not match rows " + std::to_string(rows) + " x cols " +
                                      std::to_string(cols));
  }
  for (int32_t v : index) {
    if (v < 0 || v >= table) shape_fail("take_along_last", "index out of range");
  }
  const int64_t batch = (rows * table) != 0 ? a.numel() / (rows * table) : 0;
  Shape out_shape = a.shape();
  out_shape.back() = cols;
  const auto ad = a.data();
  std::vector<double> out(static_cast<size_t>(batch * rows * cols));
  for (int64_t b = 0; b < batch; ++b) {
    for (int64_t r = 0; r < rows; ++r) {
      const double* src = ad.data() + (b * rows + r) * table;
      double* dst = out.data() + (b * rows + r) * cols;
      const int32_t* ix = index.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) dst[c] = src[ix[c]];
    }
  }
  auto ip = std::make_shared<std::vector<int32_t>>(index);
  return make_result("take_along_last", out_shape, std::move(out), {a},
                     [ip, batch, rows, table, cols](Node& self) {
                       auto& g = parent_mut(self, 0).grad_buffer();
                       for (int64_t b = 0; b < batch; ++b) {
                         for (int64_t r = 0; r < rows; ++r) {
                           double* dst = g.data() + (b * rows + r) * table;
                           const double* src = self.grad.data() + (b * rows + r) * cols;
                           const int32_t* ix = ip->data() + r * cols;
                           for (int64_t c = 0; c < cols; ++c) dst[ix[c]] += src[c];
                         }
                       }
                     });
}

// -- layer norm ----------------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() == 0) shape_fail("layer_norm", "needs rank >= 1");
  const int64_t d = x.dim(-1);
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    shape_fail2("layer_norm", x.shape(), gamma.shape());
  }
  const int64_t rows = d ? x.numel() / d : 0;
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  std::vector<double> out(xd.size());
  auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(2 * rows));  // mean, inv
  for (int64_t r = 0; r < rows; ++r) {
    const double* v = xd.data() + r * d;
    double m = 0.0;
    for (int64_t i = 0; i < d; ++i) m += v[i];
    m /= static_cast<double>(d);
    double var = 0.0;
    for (int64_t i = 0; i < d; ++i) var += (v[i] - m) * (v[i] - m);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*stats)[2 * r] = m;
    (*stats)[2 * r + 1] = inv;
    for (int64_t i = 0; i < d; ++i) out[r * d + i] = (v[i] - m) * inv * gd[i] + bd[i];
  }
  return make_result("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                     [stats, rows, d](Node& self) {
                       Node& px = parent_mut(self, 0);
                       Node& pg = parent_mut(self, 1);
                       Node& pb = parent_mut(self, 2);
                       const double dd = static_cast<double>(d);
                       std::vector<double> xhat(static_cast<size_t>(d)), dxhat(static_cast<size_t>(d));
                       for (int64_t r = 0; r < rows; ++r) {
                         const double m = (*stats)[2 * r], inv = (*stats)[2 * r + 1];
                         const double* xv = px.data.data() + r * d;
                         const double* dy = self.grad.data() + r * d;
                         double s1 = 0.0, s2 = 0.0;
                         for (int64_t i = 0; i < d; ++i) {
                           xhat[i] = (xv[i] - m) * inv;
                           dxhat[i] = dy[i] * pg.data[i];
                           s1 += dxhat[i];
                           s2 += dxhat[i] * xhat[i];
                         }
                         if (px.requires_grad) {
                           auto& g = px.grad_buffer();
                           for (int64_t i = 0; i < d; ++i) {
                             g[r * d + i] += inv / dd * (dd * dxhat[i] - s1 - xhat[i] * s2);
                           }
                         }
                         if (pg.requires_grad) {
                           auto& g = pg.grad_buffer();
                           for (int64_t i = 0; i < d; ++i) g[i] += dy[i] * xhat[i];
                         }
                         if (pb.requires_grad) {
                           auto& g = pb.grad_buffer();
                           for (int64_t i = 0; i < d; ++i) g[i] += dy[i];
                         }
                       }
                     });
}

// -- convolution ---------------------------------------------------------------

namespace {

struct ConvGeom {
  int64_t c, h, w;        // input image (for conv) / output image (for transposed)
  int64_t k, stride, pad;
  int64_t oh, ow;         // grid of kernel placements
};

// col[(ci * k + ki) * k + kj][oy * ow + ox] = img[ci][oy * s - p + ki][ox * s - p + kj]
void im2col(const double* img, const ConvGeom& g, double* col) {
  const int64_t hw = g.oh * g.ow;
  for (int64_t ci = 0; ci < g.c; ++ci) {
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        double* dst = col + ((ci * g.k + ki) * g.k + kj) * hw;
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) {
            std::fill_n(dst + oy * g.ow, g.ow, 0.0);
            continue;
          }
          const double* src = img + (ci * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kj;
            dst[oy * g.ow + ox] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* col, const ConvGeom& g, double* img) {
  const int64_t hw = g.oh * g.ow;
  for (int64_t ci = 0; ci < g.c; ++ci) {
    for (int64_t ki = 0; ki < g.k; ++ki) {
      for (int64_t kj = 0; kj < g.k; ++kj) {
        const double* src = col + ((ci * g.k + ki) * g.k + kj) * hw;
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          double* dst = img + (ci * g.h + iy) * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride, int64_t pad,
              int64_t groups) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 4 || sw.size() != 4 || sw[2] != sw[3]) shape_fail2("conv2d", sx, sw);
  const int64_t bsz = sx[0], cin = sx[1], h = sx[2], wd = sx[3];
  const int64_t cout = sw[0], k = sw[2];
  if (groups < 1 || cin % groups || cout % groups || sw[1] != cin / groups) {
    shape_fail2("conv2d", sx, sw);
  }
  if (bias.defined() && bias.shape() != Shape{cout}) shape_fail2("conv2d", sw, bias.shape());
  if (stride < 1 || pad < 0) shape_fail("conv2d", "invalid stride/pad");
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (wd + 2 * pad - k) / stride + 1;
  if (oh <= 0 || ow <= 0) shape_fail2("conv2d", sx, sw);
  const int64_t cg = cin / groups, og = cout / groups;
  const ConvGeom geo{cg, h, wd, k, stride, pad, oh, ow};
  const int64_t kk = cg * k * k, hw = oh * ow;

  const auto xd = x.data();
  const auto wdat = w.data();
  std::vector<double> out(static_cast<size_t>(bsz * cout * hw));
  std::vector<double> col(static_cast<size_t>(kk * hw));
  for (int64_t b = 0; b < bsz; ++b) {
    for (int64_t g = 0; g < groups; ++g) {
      im2col(xd.data() + (b * cin + g * cg) * h * wd, geo, col.data());
      gemm(wdat.data() + g * og * kk, col.data(), out.data() + (b * cout + g * og) * hw, og, kk, hw,
           false);
    }
    if (bias.defined()) {
      const auto bd = bias.data();
      for (int64_t co = 0; co < cout; ++co) {
        double* o = out.data() + (b * cout + co) * hw;
        for (int64_t i = 0; i < hw; ++i) o[i] += bd[co];
      }
    }
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "conv2d", {bsz, cout, oh, ow}, std::move(out), inputs,
      [geo, bsz, cin, cout, groups, cg, og, kk, hw](Node& self) {
        Node& px = parent_mut(self, 0);
        Node& pw = parent_mut(self, 1);
        const int64_t h = geo.h, wd = geo.w;
        std::vector<double> col(static_cast<size_t>(kk * hw));
        std::vector<double> dcol(static_cast<size_t>(kk * hw));
        for (int64_t b = 0; b < bsz; ++b) {
          for (int64_t g = 0; g < groups; ++g) {
            const double* dout = self.grad.data() + (b * cout + g * og) * hw;
            if (pw.requires_grad) {
              im2col(px.data.data() + (b * cin + g * cg) * h * wd, geo, col.data());
              auto colt = transposed(col.data(), kk, hw);
              gemm(dout, colt.data(), pw.grad_buffer().data() + g * og * kk, og, hw, kk, true);
            }
            if (px.requires_grad) {
              auto wt = transposed(pw.data.data() + g * og * kk, og, kk);
              gemm(wt.data(), dout, dcol.data(), kk, og, hw, false);
              col2im(dcol.data(), geo, px.grad_buffer().data() + (b * cin + g * cg) * h * wd);
            }
          }
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          auto& gb = parent_mut(self, 2).grad_buffer();
          for (int64_t b = 0; b < bsz; ++b)
            for (int64_t co = 0; co < cout; ++co) {
              const double* dout = self.grad.data() + (b * cout + co) * hw;
              double s = 0.0;
              for (int64_t i = 0; i < hw; ++i) s += dout[i];
              gb[co] += s;
            }
        }
      });
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
                        int64_t pad, int64_t output_pad) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 4 || sw.size() != 4 || sw[0] != sx[1] || sw[2] != sw[3]) {
    shape_fail2("conv_transpose2d", sx, sw);
  }
  const int64_t bsz = sx[0], cin = sx[1], h = sx[2], wd = sx[3];
  const int64_t cout = sw[1], k = sw[2];
  if (bias.defined() && bias.shape() != Shape{cout}) {
    shape_fail2("conv_transpose2d", sw, bias.shape());
  }
  const int64_t oh = (h - 1) * stride - 2 * pad + k + output_pad;
  const int64_t ow = (wd - 1) * stride - 2 * pad + k + output_pad;
  if (oh <= 0 || ow <= 0 || output_pad >= stride) shape_fail2("conv_transpose2d", sx, sw);
  // Geometry of the adjoint convolution: the output image is "img", the
  // input grid is the placement grid.
  const ConvGeom geo{cout, oh, ow, k, stride, pad, h, wd};
  const int64_t kk = cout * k * k, hw = h * wd, ohw = oh * ow;

  const auto xd = x.data();
  const auto wdat = w.data();
  auto wt = std::make_shared<std::vector<double>>(transposed(wdat.data(), cin, kk));
  std::vector<double> out(static_cast<size_t>(bsz * cout * ohw), 0.0);
  std::vector<double> col(static_cast<size_t>(kk * hw));
  for (int64_t b = 0; b < bsz; ++b) {
    gemm(wt->data(), xd.data() + b * cin * hw, col.data(), kk, cin, hw, false);
    col2im(col.data(), geo, out.data() + b * cout * ohw);
    if (bias.defined()) {
      const auto bd = bias.data();
      for (int64_t co = 0; co < cout; ++co) {
        double* o = out.data() + (b * cout + co) * ohw;
        for (int64_t i = 0; i < ohw; ++i) o[i] += bd[co];
      }
    }
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return make_result("conv_transpose2d", {bsz, cout, oh, ow}, std::move(out), inputs,
                     [geo, bsz, cin, cout, kk, hw, ohw](Node& self) {
                       Node& px = parent_mut(self, 0);
                       Node& pw = parent_mut(self, 1);
                       std::vector<double> dcol(static_cast<size_t>(kk * hw));
                       for (int64_t b = 0; b < bsz; ++b) {
                         im2col(self.grad.data() + b * cout * ohw, geo, dcol.data());
                         if (px.requires_grad) {
                           gemm(pw.data.data(), dcol.data(), px.grad_buffer().data() + b * cin * hw,
                                cin, kk, hw, true);
                         }
                         if (pw.requires_grad) {
                           auto dcolt = transposed(dcol.data(), kk, hw);
                           gemm(px.data.data() + b * cin * hw, dcolt.data(),
                                pw.grad_buffer().data(), cin, hw, kk, true);
                         }
                       }
                       if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                         auto& gb = parent_mut(self, 2).grad_buffer();
                         for (int64_t b = 0; b < bsz; ++b)
                           for (int64_t co = 0; co < cout; ++co) {
                             const double* d = self.grad.data() + (b * cout + co) * ohw;
                             double s = 0.0;
                             for (int64_t i = 0; i < ohw; ++i) s += d[i];
                             gb[co] += s;
                           }
                       }
                     });
}

Tensor pixel_shuffle(const Tensor& x, int64_t r) {
  const Shape& s = x.shape();
  if (s.size() != 4 || r < 1 || s[1] % (r * r)) shape_fail("pixel_shuffle", "bad input " + shape_str(s));
  const int64_t b = s[0], c = s[1] / (r * r), h = s[2], w = s[3];
  auto t = reshape(x, {b, c, r, r, h, w});
  t = permute(t, {0, 1, 4, 2, 5, 3});
  return reshape(t, {b, c, h * r, w * r});
}

Tensor round_values(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  // + 0.0 turns -0 into +0, matching integers decoded from a bitstream.
  for (auto& v : out) v = std::round(v) + 0.0;
  return Tensor::from_data(a.shape(), std::move(out));
}

}  // namespace tfc
