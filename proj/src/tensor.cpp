// Copyright 2026 The simt Authors
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

#include "simt/tensor.hpp"

#include <sstream>

namespace simt {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t;
  t.data_ = std::make_shared<Storage>();
  t.data_->values.assign(static_cast<size_t>(shape_numel(shape)), value);
  t.data_->shape = std::move(shape);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("tensor: " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  Tensor t;
  t.data_ = std::make_shared<Storage>();
  t.data_->shape = std::move(shape);
  t.data_->values = std::move(values);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

int64_t Tensor::dim(int axis) const {
  int n = static_cast<int>(data_->shape.size());
  if (axis < 0) axis += n;
  if (axis < 0 || axis >= n) {
    throw ShapeError("tensor: axis " + std::to_string(axis) +
                     " out of range for " + shape_str(data_->shape));
  }
  return data_->shape[axis];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("tensor: item() on non-scalar " + shape_str(shape()));
  }
  return data_->values[0];
}

std::span<double> Tensor::grad_mut() {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  return data_->grad;
}

void Tensor::accumulate_grad(std::span<const double> g) {
  auto buf = grad_mut();
  for (size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

void Tensor::zero_grad() { data_->grad.clear(); }

namespace {
thread_local Tape* g_current_tape = nullptr;
}  // namespace

Tape::Tape() : previous_(g_current_tape) { g_current_tape = this; }

Tape::~Tape() { g_current_tape = previous_; }

Tape* Tape::current() { return g_current_tape; }

void Tape::record(const char* op, Tensor output, BackwardFn fn) {
  nodes_.push_back(Node{op, std::move(output), std::move(fn)});
}

void Tape::add_grad(const Tensor& t, std::span<const double> g) {
  auto buf = grad_buffer(t);
  for (size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

std::span<double> Tape::grad_buffer(const Tensor& t) {
  auto [it, fresh] = grads_.try_emplace(t.id());
  if (fresh) {
    it->second.assign(static_cast<size_t>(t.numel()), 0.0);
    seen_.emplace_back(t.id(), t);
  }
  return it->second;
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got " +
                     shape_str(loss.shape()));
  }
  grads_.clear();
  seen_.clear();
  grad_buffer(loss)[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    auto found = grads_.find(it->output.id());
    if (found == grads_.end()) continue;  // not on the path to the loss
    it->backward(found->second, *this);
  }
  // Publish the accumulated buffers in first-seen order so repeated runs
  // apply them identically.
  for (auto& [id, tensor] : seen_) {
    if (!tensor.requires_grad()) continue;
    tensor.accumulate_grad(grads_[id]);
  }
}

bool recording(std::initializer_list<Tensor> inputs) {
  if (Tape::current() == nullptr) return false;
  for (const Tensor& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

}  // namespace simt
