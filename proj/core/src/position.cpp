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

#include "tfc/position.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "tfc/ops.hpp"

namespace tfc {

const char* pe_mode_name(PeMode mode) {
  switch (mode) {
    case PeMode::none: return "none";
    case PeMode::absolute: return "absolute";
    case PeMode::rpe_1d1d: return "rpe-1d1d";
    case PeMode::rpe_2d: return "rpe-2d";
    case PeMode::rpe_diamond: return "diamond";
  }
  return "?";
}

PeMode parse_pe_mode(const std::string& name) {
  for (PeMode m : {PeMode::none, PeMode::absolute, PeMode::rpe_1d1d, PeMode::rpe_2d,
                   PeMode::rpe_diamond}) {
    if (name == pe_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown position encoding '" + name +
                              "' (expected none, absolute, rpe-1d1d, rpe-2d or diamond)");
}

Offset diamond_clip(Offset a, int64_t h) {
  if (std::llabs(a.dy) + std::llabs(a.dx) <= h) return a;
  return {h, h};
}

PositionGrid::PositionGrid(int64_t height, int64_t width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw std::invalid_argument("PositionGrid: empty grid");
}

std::vector<TokenPos> grid_positions(const PositionGrid& grid) {
  std::vector<TokenPos> out(static_cast<size_t>(grid.tokens()));
  for (int64_t i = 0; i < grid.tokens(); ++i) out[i] = {grid.row(i), grid.col(i), false};
  return out;
}

RpeIndexer::RpeIndexer(PeMode mode, int64_t h) : mode_(mode), h_(h) {
  if (enabled() && h < 1) throw std::invalid_argument("relative position radius h must be >= 1");
}

int RpeIndexer::num_tables() const {
  switch (mode_) {
    case PeMode::rpe_1d1d: return 2;
    case PeMode::rpe_2d:
    case PeMode::rpe_diamond: return 1;
    default: return 0;
  }
}

int64_t RpeIndexer::table_rows() const {
  const int64_t side = 2 * h_ + 1;
  return mode_ == PeMode::rpe_1d1d ? side : side * side;
}

int32_t RpeIndexer::index(const TokenPos& q, const TokenPos& k, int table) const {
  const int64_t side = 2 * h_ + 1;
  const auto clamp = [this](int64_t v) { return std::max(-h_, std::min(h_, v)); };
  Offset a{h_, h_};  // start token relation
  if (!q.start && !k.start) a = {q.row - k.row, q.col - k.col};
  switch (mode_) {
    case PeMode::rpe_diamond: {
      const Offset c = diamond_clip(a, h_);
      return static_cast<int32_t>((c.dy + h_) * side + (c.dx + h_));
    }
    case PeMode::rpe_2d:
      return static_cast<int32_t>((clamp(a.dy) + h_) * side + (clamp(a.dx) + h_));
    case PeMode::rpe_1d1d:
      return static_cast<int32_t>((table == 0 ? clamp(a.dy) : clamp(a.dx)) + h_);
    default:
      throw std::logic_error("RpeIndexer: mode has no relative tables");
  }
}

std::vector<int32_t> RpeIndexer::index_table(const std::vector<TokenPos>& qs,
                                             const std::vector<TokenPos>& ks, int table) const {
  std::vector<int32_t> out(qs.size() * ks.size());
  for (size_t i = 0; i < qs.size(); ++i)
    for (size_t j = 0; j < ks.size(); ++j) out[i * ks.size() + j] = index(qs[i], ks[j], table);
  return out;
}

RpeTable::RpeTable(int64_t h, Tensor weights) : h_(h), weights_(std::move(weights)) {
  if (h < 1) throw std::invalid_argument("RpeTable: h must be >= 1");
  if (weights_.rank() != 2 || weights_.dim(0) != rows_for(h)) {
    throw ShapeError("RpeTable: weights " + shape_str(weights_.shape()) + " do not match h=" +
                     std::to_string(h));
  }
}

int32_t RpeTable::lookup_index(Offset a) const {
  const Offset c = diamond_clip(a, h_);
  return static_cast<int32_t>((c.dy + h_) * (2 * h_ + 1) + (c.dx + h_));
}

Tensor rpe_bias(const Tensor& q, const std::vector<Tensor>& tables, const RpeIndexer& indexer,
                const std::vector<TokenPos>& qs, const std::vector<TokenPos>& ks) {
  if (static_cast<int>(tables.size()) != indexer.num_tables()) {
    throw std::invalid_argument("rpe_bias: expected " + std::to_string(indexer.num_tables()) +
                                " tables");
  }
  if (q.rank() < 2 || q.dim(-2) != static_cast<int64_t>(qs.size())) {
    throw ShapeError("rpe_bias: queries " + shape_str(q.shape()) + " vs " +
                     std::to_string(qs.size()) + " positions");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(-1)));
  Tensor total;
  for (int t = 0; t < indexer.num_tables(); ++t) {
    const Tensor& tab = tables[t];
    if (tab.rank() != 2 || tab.dim(0) != indexer.table_rows() || tab.dim(1) != q.dim(-1)) {
      throw ShapeError("rpe_bias: table " + shape_str(tab.shape()) + " vs queries " +
                       shape_str(q.shape()));
    }
    Tensor scores = matmul(q, transpose(tab, 0, 1));  // [..., nq, rows]
    Tensor b = take_along_last(scores, indexer.index_table(qs, ks, t),
                               static_cast<int64_t>(ks.size()));
    total = total.defined() ? add(total, b) : b;
  }
  return mul_scalar(total, scale);
}

Tensor build_rpe_bias(const PositionGrid& grid, const RpeTable& table, const Tensor& queries) {
  if (queries.rank() != 2 || queries.dim(0) != grid.tokens()) {
    throw ShapeError("build_rpe_bias: queries " + shape_str(queries.shape()) + " vs grid of " +
                     std::to_string(grid.tokens()) + " tokens");
  }
  const auto pos = grid_positions(grid);
  return rpe_bias(queries, {table.weights()}, RpeIndexer(PeMode::rpe_diamond, table.h()), pos, pos);
}

Tensor absolute_pe(const PositionGrid& grid, int64_t dim) {
  if (dim <= 0 || dim % 2) throw std::invalid_argument("absolute_pe: dim must be even and positive");
  const int64_t half = dim / 2;
  const int64_t nfreq = (half + 1) / 2;
  // Lowest period spans 32 cells so the similarity decays monotonically over
  // a 16-cell distance.
  std::vector<double> freq(static_cast<size_t>(nfreq));
  for (int64_t f = 0; f < nfreq; ++f) {
    freq[f] = (M_PI / 16.0) * std::pow(100.0, -static_cast<double>(f) / static_cast<double>(nfreq));
  }
  std::vector<double> out(static_cast<size_t>(grid.tokens() * dim));
  for (int64_t i = 0; i < grid.tokens(); ++i) {
    const double coord[2] = {static_cast<double>(grid.row(i)), static_cast<double>(grid.col(i))};
    for (int axis = 0; axis < 2; ++axis) {
      for (int64_t j = 0; j < half; ++j) {
        const double a = coord[axis] * freq[j / 2];
        out[i * dim + axis * half + j] = (j % 2 == 0) ? std::sin(a) : std::cos(a);
      }
    }
  }
  return Tensor::from_data({grid.tokens(), dim}, std::move(out));
}

}  // namespace tfc
