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

#include "simt/ops.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "simt/kernels.hpp"

namespace simt::ops {
namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a,
                             const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail + " for input " +
                   shape_str(a.shape()));
}

int norm_axis(const char* op, const Tensor& x, int axis) {
  const int n = static_cast<int>(x.ndim());
  int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    shape_fail(op, x, "axis " + std::to_string(axis) + " out of range");
  }
  return a;
}

Tensor make_output(Shape shape, std::initializer_list<Tensor> inputs) {
  Tensor out = Tensor::zeros(std::move(shape));
  out.set_requires_grad(recording(inputs));
  return out;
}

// True when b's shape equals a trailing suffix of a's shape.
bool suffix_of(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return false;
  for (size_t i = 0; i < b.size(); ++i) {
    if (a[a.size() - b.size() + i] != b[i]) return false;
  }
  return true;
}

// Reduces g over the leading broadcast dims of a suffix operand.
void reduce_to_suffix(std::span<const double> g, int64_t suffix_numel,
                      double sign, std::span<double> out) {
  const int64_t repeats = static_cast<int64_t>(g.size()) / suffix_numel;
  for (int64_t r = 0; r < repeats; ++r) {
    const double* gp = g.data() + r * suffix_numel;
    for (int64_t i = 0; i < suffix_numel; ++i) out[i] += sign * gp[i];
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2 || a.ndim() != b.ndim()) {
    shape_fail("matmul", a, b);
  }
  const int nd = static_cast<int>(a.ndim());
  for (int i = 0; i + 2 < nd; ++i) {
    if (a.shape()[i] != b.shape()[i]) shape_fail("matmul", a, b);
  }
  const int64_t m = a.shape()[nd - 2];
  const int64_t k = a.shape()[nd - 1];
  const int64_t n = b.shape()[nd - 1];
  if (b.shape()[nd - 2] != k) shape_fail("matmul", a, b);

  Shape out_shape(a.shape().begin(), a.shape().end() - 2);
  int64_t batch = 1;
  for (int64_t d : out_shape) batch *= d;
  out_shape.push_back(m);
  out_shape.push_back(n);

  Tensor out = make_output(std::move(out_shape), {a, b});
  const double* ap = a.values().data();
  const double* bp = b.values().data();
  double* op = out.values_mut().data();
  for (int64_t s = 0; s < batch; ++s) {
    kernels::mm_nn(ap + s * m * k, bp + s * k * n, op + s * m * n, m, k, n);
  }

  if (out.requires_grad()) {
    Tape::current()->record("matmul", out,
                            [a, b, m, k, n, batch](std::span<const double> g,
                                                   Tape& tape) {
      auto ga = tape.grad_buffer(a);
      auto gb = tape.grad_buffer(b);
      std::vector<double> bt(static_cast<size_t>(k * n));
      for (int64_t s = 0; s < batch; ++s) {
        const double* as = a.values().data() + s * m * k;
        const double* bs = b.values().data() + s * k * n;
        const double* gs = g.data() + s * m * n;
        // dA = g @ B^T, dB = A^T @ g
        kernels::transpose_2d(bs, bt.data(), k, n);
        kernels::mm_nn(gs, bt.data(), ga.data() + s * m * k, m, n, k, true);
        kernels::mm_tn(as, gs, gb.data() + s * k * n, k, m, n, true);
      }
    });
  }
  return out;
}

namespace {

// Copies x into y with two axes swapped.
void swap_axes_copy(std::span<const double> x, std::span<double> y,
                    const Shape& x_shape, int a0, int a1) {
  const int nd = static_cast<int>(x_shape.size());
  std::vector<int64_t> x_strides(nd, 1);
  for (int i = nd - 2; i >= 0; --i) {
    x_strides[i] = x_strides[i + 1] * x_shape[i + 1];
  }
  Shape y_shape = x_shape;
  std::swap(y_shape[a0], y_shape[a1]);
  std::vector<int64_t> y_strides_in_x(nd, 0);
  for (int i = 0; i < nd; ++i) y_strides_in_x[i] = x_strides[i];
  std::swap(y_strides_in_x[a0], y_strides_in_x[a1]);

  std::vector<int64_t> idx(nd, 0);
  const int64_t total = static_cast<int64_t>(x.size());
  int64_t src = 0;
  for (int64_t flat = 0; flat < total; ++flat) {
    y[flat] = x[src];
    for (int i = nd - 1; i >= 0; --i) {
      if (++idx[i] < y_shape[i]) {
        src += y_strides_in_x[i];
        break;
      }
      idx[i] = 0;
      src -= y_strides_in_x[i] * (y_shape[i] - 1);
    }
  }
}

}  // namespace

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  const int a0 = norm_axis("transpose", x, axis0);
  const int a1 = norm_axis("transpose", x, axis1);
  Shape out_shape = x.shape();
  std::swap(out_shape[a0], out_shape[a1]);
  Tensor out = make_output(std::move(out_shape), {x});
  swap_axes_copy(x.values(), out.values_mut(), x.shape(), a0, a1);
  if (out.requires_grad()) {
    Shape o_shape = out.shape();
    Tape::current()->record("transpose", out,
                            [x, o_shape, a0, a1](std::span<const double> g,
                                                 Tape& tape) {
      std::vector<double> gx(g.size());
      swap_axes_copy(g, gx, o_shape, a0, a1);
      tape.add_grad(x, gx);
    });
  }
  return out;
}

namespace {

enum class BinKind { kAdd, kSub, kMul, kDiv };

Tensor binary_op(const char* name, BinKind kind, const Tensor& a,
                 const Tensor& b) {
  if (!suffix_of(a.shape(), b.shape())) shape_fail(name, a, b);
  const int64_t bn = b.numel();
  Tensor out = make_output(a.shape(), {a, b});
  const auto av = a.values();
  const auto bv = b.values();
  auto ov = out.values_mut();
  const int64_t total = a.numel();
  switch (kind) {
    case BinKind::kAdd:
      for (int64_t i = 0; i < total; ++i) ov[i] = av[i] + bv[i % bn];
      break;
    case BinKind::kSub:
      for (int64_t i = 0; i < total; ++i) ov[i] = av[i] - bv[i % bn];
      break;
    case BinKind::kMul:
      for (int64_t i = 0; i < total; ++i) ov[i] = av[i] * bv[i % bn];
      break;
    case BinKind::kDiv:
      for (int64_t i = 0; i < total; ++i) ov[i] = av[i] / bv[i % bn];
      break;
  }
  if (out.requires_grad()) {
    Tape::current()->record(name, out,
                            [kind, a, b, bn](std::span<const double> g,
                                             Tape& tape) {
      const int64_t total = a.numel();
      auto ga = tape.grad_buffer(a);
      auto gb = tape.grad_buffer(b);
      const auto av = a.values();
      const auto bv = b.values();
      switch (kind) {
        case BinKind::kAdd:
          for (int64_t i = 0; i < total; ++i) ga[i] += g[i];
          reduce_to_suffix(g, bn, 1.0, gb);
          break;
        case BinKind::kSub:
          for (int64_t i = 0; i < total; ++i) ga[i] += g[i];
          reduce_to_suffix(g, bn, -1.0, gb);
          break;
        case BinKind::kMul:
          for (int64_t i = 0; i < total; ++i) {
            ga[i] += g[i] * bv[i % bn];
            gb[i % bn] += g[i] * av[i];
          }
          break;
        case BinKind::kDiv:
          for (int64_t i = 0; i < total; ++i) {
            const double bi = bv[i % bn];
            ga[i] += g[i] / bi;
            gb[i % bn] -= g[i] * av[i] / (bi * bi);
          }
          break;
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op("add", BinKind::kAdd, a, b);
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op("sub", BinKind::kSub, a, b);
}
Tensor multiply(const Tensor& a, const Tensor& b) {
  return binary_op("multiply", BinKind::kMul, a, b);
}
Tensor divide(const Tensor& a, const Tensor& b) {
  return binary_op("divide", BinKind::kDiv, a, b);
}

Tensor scale(const Tensor& x, double c) {
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = xv[i] * c;
  if (out.requires_grad()) {
    Tape::current()->record("scale", out,
                            [x, c](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c;
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& x, double c) {
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = xv[i] + c;
  if (out.requires_grad()) {
    Tape::current()->record("add_scalar", out,
                            [x](std::span<const double> g, Tape& tape) {
      tape.add_grad(x, g);
    });
  }
  return out;
}

Tensor exp(const Tensor& x) {
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = std::exp(xv[i]);
  if (out.requires_grad()) {
    Tape::current()->record("exp", out,
                            [x, out](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      const auto ov = out.values();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * ov[i];
    });
  }
  return out;
}

Tensor log(const Tensor& x) {
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = std::log(xv[i]);
  if (out.requires_grad()) {
    Tape::current()->record("log", out,
                            [x](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      const auto xv = x.values();
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (out.requires_grad()) {
    Tape::current()->record("relu", out,
                            [x](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      const auto xv = x.values();
      for (size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > 0.0) gx[i] += g[i];
      }
    });
  }
  return out;
}

namespace {

Tensor softmax_like(const char* name, const Tensor& x, bool log_space) {
  if (x.ndim() < 1) shape_fail(name, x, "needs at least one axis");
  const int64_t n = x.shape().back();
  const int64_t rows = x.numel() / n;
  Tensor out = make_output(x.shape(), {x});
  const double* xp = x.values().data();
  double* op = out.values_mut().data();
  for (int64_t r = 0; r < rows; ++r) {
    if (log_space) {
      kernels::log_softmax_row(xp + r * n, op + r * n, n);
    } else {
      kernels::softmax_row(xp + r * n, op + r * n, n);
    }
  }
  if (out.requires_grad()) {
    Tape::current()->record(name, out,
                            [x, out, n, rows, log_space](
                                std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      const auto ov = out.values();
      for (int64_t r = 0; r < rows; ++r) {
        const double* gr = g.data() + r * n;
        const double* yr = ov.data() + r * n;
        double* dr = gx.data() + r * n;
        if (log_space) {
          // dx = g - softmax(x) * sum(g)
          double gsum = 0.0;
          for (int64_t i = 0; i < n; ++i) gsum += gr[i];
          for (int64_t i = 0; i < n; ++i) {
            dr[i] += gr[i] - std::exp(yr[i]) * gsum;
          }
        } else {
          // dx = (g - <g, y>) * y
          double dot = 0.0;
          for (int64_t i = 0; i < n; ++i) dot += gr[i] * yr[i];
          for (int64_t i = 0; i < n; ++i) dr[i] += (gr[i] - dot) * yr[i];
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor softmax(const Tensor& x) { return softmax_like("softmax", x, false); }

Tensor log_softmax(const Tensor& x) {
  return softmax_like("log_softmax", x, true);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (x.ndim() < 1) shape_fail("layer_norm", x, "needs at least one axis");
  const int64_t n = x.shape().back();
  if (gain.ndim() != 1 || gain.dim(0) != n) shape_fail("layer_norm", x, gain);
  if (bias.ndim() != 1 || bias.dim(0) != n) shape_fail("layer_norm", x, bias);
  const int64_t rows = x.numel() / n;

  Tensor out = make_output(x.shape(), {x, gain, bias});
  auto stats_mean = std::make_shared<std::vector<double>>(rows);
  auto stats_rstd = std::make_shared<std::vector<double>>(rows);
  const double* xp = x.values().data();
  const double* gp = gain.values().data();
  const double* bp = bias.values().data();
  double* op = out.values_mut().data();
  std::vector<double> norm(static_cast<size_t>(n));
  for (int64_t r = 0; r < rows; ++r) {
    kernels::layer_norm_row(xp + r * n, norm.data(), n, eps,
                            &(*stats_mean)[r], &(*stats_rstd)[r]);
    double* orow = op + r * n;
    for (int64_t i = 0; i < n; ++i) orow[i] = norm[i] * gp[i] + bp[i];
  }

  if (out.requires_grad()) {
    Tape::current()->record("layer_norm", out,
                            [x, gain, bias, n, rows, stats_mean, stats_rstd](
                                std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      auto ggain = tape.grad_buffer(gain);
      auto gbias = tape.grad_buffer(bias);
      const auto xv = x.values();
      const auto gainv = gain.values();
      const double inv_n = 1.0 / static_cast<double>(n);
      std::vector<double> xh(static_cast<size_t>(n));
      for (int64_t r = 0; r < rows; ++r) {
        const double mean = (*stats_mean)[r];
        const double rstd = (*stats_rstd)[r];
        const double* xr = xv.data() + r * n;
        const double* gr = g.data() + r * n;
        double m1 = 0.0, m2 = 0.0;
        for (int64_t i = 0; i < n; ++i) {
          xh[i] = (xr[i] - mean) * rstd;
          const double gg = gr[i] * gainv[i];
          m1 += gg;
          m2 += gg * xh[i];
        }
        m1 *= inv_n;
        m2 *= inv_n;
        double* dxr = gx.data() + r * n;
        for (int64_t i = 0; i < n; ++i) {
          const double gg = gr[i] * gainv[i];
          dxr[i] += rstd * (gg - m1 - xh[i] * m2);
          ggain[i] += gr[i] * xh[i];
          gbias[i] += gr[i];
        }
      }
    });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  if (table.ndim() != 2) {
    shape_fail("embedding_lookup", table, "table must be 2-D");
  }
  const int64_t v = table.dim(0);
  const int64_t d = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw Error("embedding_lookup: id " + std::to_string(id) +
                  " out of vocabulary of size " + std::to_string(v));
    }
  }
  const int64_t n = static_cast<int64_t>(ids.size());
  Tensor out = make_output({n, d}, {table});
  const double* tp = table.values().data();
  double* op = out.values_mut().data();
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(op + i * d, tp + ids[i] * d, sizeof(double) * d);
  }
  if (out.requires_grad()) {
    std::vector<int> ids_copy(ids.begin(), ids.end());
    Tape::current()->record("embedding_lookup", out,
                            [table, ids_copy, d](std::span<const double> g,
                                                 Tape& tape) {
      auto gt = tape.grad_buffer(table);
      for (size_t i = 0; i < ids_copy.size(); ++i) {
        const double* gr = g.data() + i * d;
        double* tr = gt.data() + static_cast<int64_t>(ids_copy[i]) * d;
        for (int64_t j = 0; j < d; ++j) tr[j] += gr[j];
      }
    });
  }
  return out;
}

Tensor masked_fill(const Tensor& x, const std::vector<uint8_t>& mask,
                   double value) {
  const int64_t msize = static_cast<int64_t>(mask.size());
  int64_t suffix = 1;
  bool ok = msize == 1;
  for (int i = static_cast<int>(x.ndim()) - 1; i >= 0 && !ok; --i) {
    suffix *= x.shape()[i];
    ok = suffix == msize;
  }
  if (!ok || msize == 0 || x.numel() % msize != 0) {
    shape_fail("masked_fill", x,
               "mask of size " + std::to_string(mask.size()) +
                   " is not a trailing block");
  }
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) {
    ov[i] = mask[i % msize] ? value : xv[i];
  }
  if (out.requires_grad()) {
    auto mask_copy = std::make_shared<std::vector<uint8_t>>(mask);
    Tape::current()->record("masked_fill", out,
                            [x, mask_copy, msize](std::span<const double> g,
                                                  Tape& tape) {
      auto gx = tape.grad_buffer(x);
      for (size_t i = 0; i < g.size(); ++i) {
        if (!(*mask_copy)[i % msize]) gx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int a = norm_axis("concat", parts[0], axis);
  Shape out_shape = parts[0].shape();
  int64_t axis_total = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != parts[0].ndim()) shape_fail("concat", parts[0], p);
    for (int i = 0; i < static_cast<int>(p.ndim()); ++i) {
      if (i != a && p.shape()[i] != parts[0].shape()[i]) {
        shape_fail("concat", parts[0], p);
      }
    }
    axis_total += p.shape()[a];
  }
  out_shape[a] = axis_total;

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= out_shape[i];
  for (int i = a + 1; i < static_cast<int>(out_shape.size()); ++i) {
    inner *= out_shape[i];
  }

  std::vector<Tensor> inputs(parts.begin(), parts.end());
  bool rec = false;
  for (const Tensor& p : inputs) rec = rec || recording({p});
  Tensor out = Tensor::zeros(out_shape);
  out.set_requires_grad(rec);

  double* op = out.values_mut().data();
  const int64_t out_row = axis_total * inner;
  int64_t offset = 0;
  for (const Tensor& p : inputs) {
    const int64_t rows = p.shape()[a] * inner;
    const double* pp = p.values().data();
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(op + o * out_row + offset, pp + o * rows,
                  sizeof(double) * rows);
    }
    offset += rows;
  }

  if (out.requires_grad()) {
    Tape::current()->record("concat", out,
                            [inputs, outer, inner, out_row, a](
                                std::span<const double> g, Tape& tape) {
      int64_t offset = 0;
      for (const Tensor& p : inputs) {
        const int64_t rows = p.shape()[a] * inner;
        auto gp = tape.grad_buffer(p);
        for (int64_t o = 0; o < outer; ++o) {
          const double* gs = g.data() + o * out_row + offset;
          double* gd = gp.data() + o * rows;
          for (int64_t i = 0; i < rows; ++i) gd[i] += gs[i];
        }
        offset += rows;
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    shape_fail("reshape", x, "target " + shape_str(shape) + " has different size");
  }
  Tensor out = make_output(std::move(shape), {x});
  std::memcpy(out.values_mut().data(), x.values().data(),
              sizeof(double) * x.numel());
  if (out.requires_grad()) {
    Tape::current()->record("reshape", out,
                            [x](std::span<const double> g, Tape& tape) {
      tape.add_grad(x, g);
    });
  }
  return out;
}

namespace {

Tensor reduce_axis(const char* name, const Tensor& x, int axis, bool take_mean) {
  const int a = norm_axis(name, x, axis);
  const int64_t n = x.shape()[a];
  Shape out_shape;
  for (int i = 0; i < static_cast<int>(x.ndim()); ++i) {
    if (i != a) out_shape.push_back(x.shape()[i]);
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < a; ++i) outer *= x.shape()[i];
  for (int i = a + 1; i < static_cast<int>(x.ndim()); ++i) {
    inner *= x.shape()[i];
  }
  const double w = take_mean ? 1.0 / static_cast<double>(n) : 1.0;

  Tensor out = make_output(std::move(out_shape), {x});
  const double* xp = x.values().data();
  double* op = out.values_mut().data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t j = 0; j < n; ++j) {
      const double* xr = xp + (o * n + j) * inner;
      double* orow = op + o * inner;
      for (int64_t i = 0; i < inner; ++i) orow[i] += xr[i] * w;
    }
  }
  if (out.requires_grad()) {
    Tape::current()->record(name, out,
                            [x, outer, inner, n, w](std::span<const double> g,
                                                    Tape& tape) {
      auto gx = tape.grad_buffer(x);
      for (int64_t o = 0; o < outer; ++o) {
        const double* gr = g.data() + o * inner;
        for (int64_t j = 0; j < n; ++j) {
          double* xr = gx.data() + (o * n + j) * inner;
          for (int64_t i = 0; i < inner; ++i) xr[i] += gr[i] * w;
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor sum(const Tensor& x, int axis) {
  return reduce_axis("sum", x, axis, false);
}
Tensor mean(const Tensor& x, int axis) {
  return reduce_axis("mean", x, axis, true);
}

namespace {

Tensor reduce_all(const char* name, const Tensor& x, bool take_mean) {
  const double w = take_mean ? 1.0 / static_cast<double>(x.numel()) : 1.0;
  Tensor out = make_output({}, {x});
  const auto xv = x.values();
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += xv[i];
  out.values_mut()[0] = s * w;
  if (out.requires_grad()) {
    Tape::current()->record(name, out,
                            [x, w](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * w;
    });
  }
  return out;
}

}  // namespace

Tensor sum_all(const Tensor& x) { return reduce_all("sum_all", x, false); }
Tensor mean_all(const Tensor& x) { return reduce_all("mean_all", x, true); }

Tensor dropout(const Tensor& x, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw Error("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) {
    (*mask)[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
  }
  Tensor out = make_output(x.shape(), {x});
  const auto xv = x.values();
  auto ov = out.values_mut();
  for (int64_t i = 0; i < x.numel(); ++i) ov[i] = xv[i] * (*mask)[i];
  if (out.requires_grad()) {
    Tape::current()->record("dropout", out,
                            [x, mask](std::span<const double> g, Tape& tape) {
      auto gx = tape.grad_buffer(x);
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

}  // namespace simt::ops

namespace simt {

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double eps) {
  // Analytic gradient.
  std::vector<double> base(x.values().begin(), x.values().end());
  Tensor xa = Tensor::from(x.shape(), base, /*requires_grad=*/true);
  std::vector<double> analytic;
  {
    Tape tape;
    Tensor loss = f(xa);
    if (loss.numel() != 1) {
      throw ShapeError("grad_check: f must return a scalar, got " +
                       shape_str(loss.shape()));
    }
    if (!std::isfinite(loss.item())) {
      throw Error("grad_check: loss is not finite");
    }
    tape.backward(loss);
    if (xa.has_grad()) {
      analytic.assign(xa.grad().begin(), xa.grad().end());
    } else {
      analytic.assign(base.size(), 0.0);
    }
  }

  // Central differences, no tape.
  double max_err = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    std::vector<double> bumped = base;
    bumped[i] = base[i] + eps;
    const double up = f(Tensor::from(x.shape(), bumped)).item();
    bumped[i] = base[i] - eps;
    const double down = f(Tensor::from(x.shape(), bumped)).item();
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error("grad_check: non-finite value during finite differences");
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

double grad_check_param(const std::function<Tensor()>& forward, Tensor param,
                        double eps) {
  param.zero_grad();
  std::vector<double> analytic;
  {
    Tape tape;
    Tensor loss = forward();
    if (loss.numel() != 1) {
      throw ShapeError("grad_check: forward must return a scalar, got " +
                       shape_str(loss.shape()));
    }
    if (!std::isfinite(loss.item())) {
      throw Error("grad_check: loss is not finite");
    }
    tape.backward(loss);
    if (param.has_grad()) {
      analytic.assign(param.grad().begin(), param.grad().end());
    } else {
      analytic.assign(static_cast<size_t>(param.numel()), 0.0);
    }
  }
  param.zero_grad();

  auto vals = param.values_mut();
  double max_err = 0.0;
  for (size_t i = 0; i < vals.size(); ++i) {
    const double saved = vals[i];
    vals[i] = saved + eps;
    const double up = forward().item();
    vals[i] = saved - eps;
    const double down = forward().item();
    vals[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error("grad_check: non-finite value during finite differences");
    }
    const double numeric = (up - down) / (2.0 * eps);
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

}  // namespace simt
