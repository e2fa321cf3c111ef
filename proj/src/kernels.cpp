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

#include "simt/kernels.hpp"

#include <cmath>
#include <cstring>

namespace simt::kernels {

void mm_nn(const double* a, const double* b, double* c,
           int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void mm_tn(const double* a, const double* b, double* c,
           int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  for (int64_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (int64_t i = 0; i < m; ++i) {
      const double av = ap[i];
      double* ci = c + i * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void transpose_2d(const double* x, double* y, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) y[j * rows + i] = x[i * cols + j];
}

void softmax_row(const double* x, double* y, int64_t n) {
  double mx = x[0];
  for (int64_t i = 1; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - mx);
    sum += y[i];
  }
  const double inv = 1.0 / sum;
  for (int64_t i = 0; i < n; ++i) y[i] *= inv;
}

void log_softmax_row(const double* x, double* y, int64_t n) {
  double mx = x[0];
  for (int64_t i = 1; i < n; ++i) mx = x[i] > mx ? x[i] : mx;
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  const double lse = mx + std::log(sum);
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] - lse;
}

void layer_norm_row(const double* x, double* y, int64_t n, double eps,
                    double* mean_out, double* rstd_out) {
  double mean = 0.0;
  for (int64_t i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double rstd = 1.0 / std::sqrt(var + eps);
  for (int64_t i = 0; i < n; ++i) y[i] = (x[i] - mean) * rstd;
  *mean_out = mean;
  *rstd_out = rstd;
}

}  // namespace simt::kernels
