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

#include <cstdint>
#include <string>
#include <vector>

#include "tfc/tensor.hpp"

namespace tfc {

enum class PeMode { none, absolute, rpe_1d1d, rpe_2d, rpe_diamond };

const char* pe_mode_name(PeMode mode);
// Accepts the names returned by pe_mode_name. Throws std::invalid_argument.
PeMode parse_pe_mode(const std::string& name);

struct Offset {
  int64_t dy = 0;
  int64_t dx = 0;
  bool operator==(const Offset&) const = default;
};

/// Offsets with l1 norm <= h pass through; every other offset collapses onto
/// the single sentinel coordinate (h, h).
Offset diamond_clip(Offset a, int64_t h);

/// Row-major token layout of an H x W latent grid.
class PositionGrid {
 public:
  PositionGrid(int64_t height, int64_t width);
  int64_t height() const { return height_; }
  int64_t width() const { return width_; }
  int64_t tokens() const { return height_ * width_; }
  int64_t row(int64_t i) const { return i / width_; }
  int64_t col(int64_t i) const { return i % width_; }
  int64_t index(int64_t r, int64_t c) const { return r * width_ + c; }

 private:
  int64_t height_, width_;
};

// A participant in attention: a grid position, or the learned start token
// (which has no coordinate and always uses the sentinel relation).
struct TokenPos {
  int64_t row = 0;
  int64_t col = 0;
  bool start = false;
};

std::vector<TokenPos> grid_positions(const PositionGrid& grid);

/// Maps (query, key) pairs to rows of the relative-position tables.
///   rpe_diamond: one (2h+1)^2 table, offsets through diamond_clip.
///   rpe_2d:      one (2h+1)^2 table, each axis clamped to [-h, h].
///   rpe_1d1d:    two (2h+1) tables (row, column); their biases are summed.
/// Offsets are query minus key.
class RpeIndexer {
 public:
  RpeIndexer(PeMode mode, int64_t h);
  PeMode mode() const { return mode_; }
  int64_t h() const { return h_; }
  bool enabled() const { return num_tables() > 0; }
  int num_tables() const;
  int64_t table_rows() const;
  int32_t index(const TokenPos& q, const TokenPos& k, int table) const;
  // Flattened nq x nk index table.
  std::vector<int32_t> index_table(const std::vector<TokenPos>& qs, const std::vector<TokenPos>& ks,
                                   int table) const;

 private:
  PeMode mode_;
  int64_t h_;
};

/// Diamond table: a dense (2h+1) x (2h+1) grid of d_k vectors. The in-square
/// entries outside the diamond exist but are never addressed.
class RpeTable {
 public:
  RpeTable(int64_t h, Tensor weights);  // weights: [(2h+1)^2, d_k]
  int64_t h() const { return h_; }
  const Tensor& weights() const { return weights_; }
  static int64_t rows_for(int64_t h) { return (2 * h + 1) * (2 * h + 1); }
  int32_t lookup_index(Offset a) const;
  int32_t sentinel_index() const { return lookup_index({h_, h_}); }

 private:
  int64_t h_;
  Tensor weights_;
};

/// Bias term of relation-aware attention, split out so it can be added to the
/// content logits: out[.., i, j] = q[.., i, :] . table[index(i, j)] / sqrt(d_k).
/// q: [..., nq, d_k]; tables: one [rows, d_k] tensor per indexer table.
Tensor rpe_bias(const Tensor& q, const std::vector<Tensor>& tables, const RpeIndexer& indexer,
                const std::vector<TokenPos>& qs, const std::vector<TokenPos>& ks);

/// tokens x tokens bias for a single head of queries [tokens, d_k].
Tensor build_rpe_bias(const PositionGrid& grid, const RpeTable& table, const Tensor& queries);

/// Fixed 2-D sinusoidal encoding [tokens, dim]: the first dim/2 channels
/// encode the row, the rest the column. Channel pairs alternate sin, cos.
Tensor absolute_pe(const PositionGrid& grid, int64_t dim);

}  // namespace tfc
