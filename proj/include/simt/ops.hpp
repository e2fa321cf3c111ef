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

#ifndef SIMT_OPS_HPP_
#define SIMT_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "simt/rng.hpp"
#include "simt/tensor.hpp"

// Differentiable primitives. Each op validates shapes (throwing ShapeError
// with the op name and the offending shapes), computes the forward value,
// and records a node on the current tape when any input requires grad.
//
// Broadcasting is restricted to leading batch dimensions: matmul batches
// over equal leading dims, and the binary ops accept a right operand whose
// shape is a suffix of the left's. Anything else needs an explicit reshape.
namespace simt::ops {

// (B..., M, K) @ (B..., K, N) -> (B..., M, N); leading dims must be equal.
Tensor matmul(const Tensor& a, const Tensor& b);

// Swaps two axes (negative axes count from the end).
Tensor transpose(const Tensor& x, int axis0 = -2, int axis1 = -1);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);

// Last-axis softmax / log-softmax.
Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);

// Normalizes the last axis to zero mean / unit variance (eps inside the
// sqrt, so a constant row maps to zeros), then applies gain and bias of
// shape (last_dim,).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// table (V, d), ids in [0, V) -> (|ids|, d).
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

// Writes `value` where mask is true. mask.size() must equal numel(x) or the
// numel of a trailing suffix of x's shape (broadcast over leading dims).
Tensor masked_fill(const Tensor& x, const std::vector<uint8_t>& mask,
                   double value);

Tensor concat(std::span<const Tensor> parts, int axis);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x, int axis);
Tensor mean(const Tensor& x, int axis);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Inverted dropout: kept entries are scaled by 1/(1-rate). rate in [0, 1).
// Consumes one draw per element from rng so runs replay exactly.
Tensor dropout(const Tensor& x, double rate, RngStream& rng);

}  // namespace simt::ops

namespace simt {

// Max over elements of |analytic - numeric| / max(1, |analytic|, |numeric|)
// for a scalar-valued f, with numeric = central differences of step eps.
// Throws Error on non-finite values. The analytic side runs backward() on a
// fresh tape; f must be deterministic.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps = 1e-5);

// Same check for a parameter that participates in `forward` through a model:
// the analytic side reads param.grad after backward, the numeric side bumps
// the parameter values in place (restored on exit).
double grad_check_param(const std::function<Tensor()>& forward, Tensor param,
                        double eps = 1e-5);

}  // namespace simt

#endif  // SIMT_OPS_HPP_
