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

// Differentiable primitives. Binary elementwise ops broadcast only along
// trailing axes: the shorter operand's shape must be a suffix of the longer
// one's. Everything else needs an explicit reshape.

#pragma once

#include <cstdint>
#include <vector>

#include "tfc/tensor.hpp"

namespace tfc {

// -- elementwise binary ------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator+(double s, const Tensor& a) { return add_scalar(a, s); }
inline Tensor operator-(const Tensor& a, double s) { return add_scalar(a, -s); }
inline Tensor operator*(const Tensor& a, double s) { return mul_scalar(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul_scalar(a, s); }
inline Tensor operator-(const Tensor& a) { return mul_scalar(a, -1.0); }

// -- elementwise unary -------------------------------------------------------
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.01);
Tensor gelu(const Tensor& a);
Tensor erf(const Tensor& a);
// Standard normal CDF, evaluated through erfc so the lower tail keeps
// relative precision.
Tensor normal_cdf(const Tensor& a);
// max(a, lo) with zero gradient where clamped.
Tensor clamp_min(const Tensor& a, double lo);
// max(a, lo); where clamped, passes the gradient only if it would push the
// value up. Keeps rate terms trainable for badly mispredicted symbols.
Tensor lower_bound(const Tensor& a, double lo);

// -- reductions --------------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_last(const Tensor& a);   // drops the last axis
Tensor mean_last(const Tensor& a);  // drops the last axis

// -- shape -------------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a, int64_t axis0, int64_t axis1);
Tensor permute(const Tensor& a, const std::vector<int64_t>& perm);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t length);
// Picks entries along axis in the given order; repeats are allowed.
Tensor index_select(const Tensor& a, int64_t axis, const std::vector<int64_t>& index);

// -- linear algebra ----------------------------------------------------------
// a: [..., m, k]; b: [..., k, n] with identical leading axes, or b: [k, n]
// shared by every batch entry.
Tensor matmul(const Tensor& a, const Tensor& b);

// -- attention primitives ----------------------------------------------------
// Replaces entries whose keep flag is 0 with `fill`. keep_shape must be a
// suffix of a's shape.
Tensor mask_fill(const Tensor& a, const std::vector<uint8_t>& keep, const Shape& keep_shape,
                 double fill);
// Row-wise top-k over the last axis: entries outside the k largest become
// -inf. Ties resolve toward the lower index. k >= row length is the identity.
Tensor topk_filter(const Tensor& a, int64_t k);
// Softmax over the last axis; -inf entries get weight 0. A row that is
// entirely -inf is an error unless allow_empty_rows, in which case it yields
// all zeros.
Tensor softmax(const Tensor& a, bool allow_empty_rows = false);
// a: [..., rows, table]; index: rows x cols table indices.
// out[..., r, c] = a[..., r, index[r * cols + c]].
Tensor take_along_last(const Tensor& a, const std::vector<int32_t>& index, int64_t cols);

// -- normalization -----------------------------------------------------------
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// -- convolution -------------------------------------------------------------
// x: [B, Cin, H, W]; w: [Cout, Cin/groups, k, k]; bias: [Cout] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride, int64_t pad,
              int64_t groups = 1);
// x: [B, Cin, H, W]; w: [Cin, Cout, k, k]; bias: [Cout] or undefined.
// Output extent (H - 1) * stride - 2 * pad + k + output_pad.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& bias, int64_t stride,
                        int64_t pad, int64_t output_pad);
// [B, C*r*r, H, W] -> [B, C, H*r, W*r]
Tensor pixel_shuffle(const Tensor& x, int64_t r);

// -- non-differentiable helpers ----------------------------------------------
// Round half away from zero; result carries no graph history.
Tensor round_values(const Tensor& a);

// C[m,n] (+)= A[m,k] * B[k,n], row-major. Fixed accumulation order per output
// element (ascending k), independent of m and n.
void gemm(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n,
          bool accumulate);

}  // namespace tfc
