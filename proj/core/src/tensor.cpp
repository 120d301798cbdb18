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

#include "tfc/tensor.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tfc {

namespace {

thread_local Precision g_precision = Precision::f64;
thread_local bool g_grad_enabled = true;

}  // namespace

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Precision precision() { return g_precision; }
void set_precision(Precision p) { g_precision = p; }

PrecisionScope::PrecisionScope(Precision p) : saved_(g_precision) { g_precision = p; }
PrecisionScope::~PrecisionScope() { g_precision = saved_; }

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

std::vector<double>& Node::grad_buffer() {
  if (grad.empty() && !data.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }
Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto n = numel_of(shape);
  return from_data(std::move(shape), std::vector<double>(static_cast<size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return from_data({}, {value}); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  if (numel_of(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("from_data: shape " + shape_str(shape) + " needs " +
                     std::to_string(numel_of(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->shape;
}

int64_t Tensor::dim(int64_t axis) const {
  const auto& s = shape();
  int64_t r = static_cast<int64_t>(s.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("dim: axis out of range for shape " + shape_str(s));
  }
  return s[static_cast<size_t>(axis)];
}

int64_t Tensor::numel() const { return static_cast<int64_t>(node_ ? node_->data.size() : 0); }

std::span<const double> Tensor::data() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  return node_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("at: index rank mismatch for " + shape_str(s));
  int64_t flat = 0;
  size_t i = 0;
  for (int64_t v : index) {
    if (v < 0 || v >= s[i]) throw ShapeError("at: index out of range for " + shape_str(s));
    flat = flat * s[i] + v;
    ++i;
  }
  return node_->data[static_cast<size_t>(flat)];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!node_) throw std::logic_error("use of undefined tensor");
  node_->requires_grad = flag;
  return *this;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->grad_buffer();
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const {
  return from_data(shape(), std::vector<double>(node_->data.begin(), node_->data.end()));
}

namespace {

void round_to_precision(std::vector<double>& data) {
  if (g_precision != Precision::f32) return;
  for (auto& v : data) v = static_cast<double>(static_cast<float>(v));
}

template <typename Range>
Tensor make_result_impl(const char* op, Shape shape, std::vector<double> data,
                        const Range& inputs, BackwardFn backward) {
  if (numel_of(shape) != static_cast<int64_t>(data.size())) {
    throw std::logic_error(std::string(op) + ": result size mismatch for " + shape_str(shape));
  }
  round_to_precision(data);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (g_grad_enabled && backward) {
    bool any = false;
    for (const Tensor& t : inputs) any = any || t.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs, BackwardFn backward) {
  return make_result_impl(op, std::move(shape), std::move(data), inputs, std::move(backward));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs, BackwardFn backward) {
  return make_result_impl(op, std::move(shape), std::move(data), inputs, std::move(backward));
}

namespace {

std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;  // parents before children
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::logic_error("backward: undefined tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  }
  Node* root = loss.node();
  if (!root->requires_grad) {
    throw std::logic_error("backward: loss is not connected to any tensor requiring grad");
  }
  auto order = topo_order(root);
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

void dump_graph(const Tensor& root, std::ostream& out) {
  std::unordered_map<const Node*, size_t> ids;
  std::vector<const Node*> stack{root.node()};
  std::vector<const Node*> order;
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n || ids.count(n)) continue;
    ids[n] = ids.size();
    order.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  for (const Node* n : order) {
    out << '#' << ids[n] << ' ' << n->op << ' ' << shape_str(n->shape)
        << (n->requires_grad ? " grad" : "") << " <-";
    for (const auto& p : n->parents) out << " #" << ids[p.get()];
    out << '\n';
  }
}

}  // namespace tfc
