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
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfc {

using Shape = std::vector<int64_t>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thrown for any shape contract violation. The message names the primitive
/// and the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Storage precision of primitive outputs. Arithmetic is always carried out in
// double; in f32 mode every primitive rounds its results to the nearest float
// before storing them. Training and gradient checks use f64, the coding path
// uses f32.
enum class Precision { f64, f32 };

Precision precision();
void set_precision(Precision p);

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

bool grad_enabled();

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Backward rule: reads node.grad and accumulates into the parents' grads.
using BackwardFn = std::function<void(Node& node)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  BackwardFn backward;

  // Returns the grad buffer, allocating zeros on first use.
  std::vector<double>& grad_buffer();
};

/// Dense row-major tensor of doubles. A Tensor is a cheap handle; copies
/// share storage. Tape edges are recorded only while grad mode is enabled.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from_data(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t rank() const { return static_cast<int64_t>(shape().size()); }
  int64_t dim(int64_t axis) const;  // negative axes count from the back
  int64_t numel() const;

  std::span<const double> data() const;
  // Mutable access is only for leaves (parameters, inputs); mutating a tensor
  // that is already part of a recorded graph invalidates its backward.
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Copy of the values with no graph history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  Node* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

/// Builds a result tensor, rounding to the active precision and recording the
/// backward edge when any input requires grad.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs, BackwardFn backward);
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs, BackwardFn backward);

/// Reverse-mode sweep from a scalar loss. Populates grad on every reachable
/// tensor that requires grad (leaves accumulate across calls).
void backward(const Tensor& loss);

/// Writes one line per reachable graph node: op, shape, grad flag.
void dump_graph(const Tensor& root, std::ostream& out);

}  // namespace tfc
