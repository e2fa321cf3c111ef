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

#ifndef SIMT_TENSOR_HPP_
#define SIMT_TENSOR_HPP_

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "simt/common.hpp"

namespace simt {

// Dense row-major f64 tensor. Tensor is a shared handle: copies alias the
// same storage. Values are treated as immutable once the tensor has entered
// a graph; only the grad buffer is mutated afterwards.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  int64_t ndim() const { return static_cast<int64_t>(data_->shape.size()); }
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(data_->values.size()); }

  std::span<const double> values() const { return data_->values; }
  std::span<double> values_mut() { return data_->values; }
  double item() const;  // scalar tensors only

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool rg) { data_->requires_grad = rg; }

  bool has_grad() const { return !data_->grad.empty(); }
  std::span<const double> grad() const { return data_->grad; }
  std::span<double> grad_mut();       // allocates zeros on first use
  void accumulate_grad(std::span<const double> g);
  void zero_grad();                   // drops the grad buffer

  // Identity of the underlying storage; used as a map key.
  const void* id() const { return data_.get(); }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty when absent
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> data_;
};

// Append-only record of differentiable operations (a tape). Nodes are
// appended in execution order, which is a topological order by construction;
// backward() visits each node exactly once in reverse.
//
// A Tape activates itself as the thread's current tape on construction and
// restores the previous one on destruction, so graph recording is scoped and
// tape-free code (inference) never pays for it.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();

  // fn receives the output gradient and accumulates into the inputs' buffers
  // via add_grad()/grad_buffer().
  using BackwardFn = std::function<void(std::span<const double>, Tape&)>;
  void record(const char* op, Tensor output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1, runs the tape in reverse, then adds the
  // accumulated buffers onto the .grad of every requires_grad tensor seen.
  // loss must be scalar.
  void backward(const Tensor& loss);

  // Accumulation interface for backward closures.
  void add_grad(const Tensor& t, std::span<const double> g);
  std::span<double> grad_buffer(const Tensor& t);  // zero on first request

  int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

 private:
  struct Node {
    const char* op;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const void*, std::vector<double>> grads_;
  std::vector<std::pair<const void*, Tensor>> seen_;  // insertion order
  Tape* previous_ = nullptr;
};

// True when a tape is active and any input requires grad; ops use this to
// decide whether to record.
bool recording(std::initializer_list<Tensor> inputs);

}  // namespace simt

#endif  // SIMT_TENSOR_HPP_
