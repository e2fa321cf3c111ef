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

#ifndef SIMT_KERNELS_HPP_
#define SIMT_KERNELS_HPP_

#include <cstdint>

// Dense f64 kernels shared by the graph ops and the incremental decoder.
// Every kernel accumulates reductions as a plain left fold in ascending
// index order; the streaming-equals-offline guarantees depend on both code
// paths running these exact folds, so do not reorder the loops.
namespace simt::kernels {

// c = a(m,k) @ b(k,n), optionally accumulating into c.
void mm_nn(const double* a, const double* b, double* c,
           int64_t m, int64_t k, int64_t n, bool accumulate = false);

// c = a(k,m)^T @ b(k,n).
void mm_tn(const double* a, const double* b, double* c,
           int64_t m, int64_t k, int64_t n, bool accumulate = false);

// out-of-place transpose of a (rows, cols) matrix.
void transpose_2d(const double* x, double* y, int64_t rows, int64_t cols);

void softmax_row(const double* x, double* y, int64_t n);
void log_softmax_row(const double* x, double* y, int64_t n);

// y = (x - mean) * rstd with rstd = 1/sqrt(var + eps); biased variance.
void layer_norm_row(const double* x, double* y, int64_t n, double eps,
                    double* mean_out, double* rstd_out);

}  // namespace simt::kernels

#endif  // SIMT_KERNELS_HPP_
