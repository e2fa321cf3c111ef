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

#include "simt/ctc.hpp"

#include <cmath>
#include <limits>

#include "simt/kernels.hpp"
#include "simt/ops.hpp"

namespace simt::ctc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// Blank-augmented label sequence: blank, y1, blank, y2, ..., blank.
std::vector<int> extended_labels(std::span<const int> target) {
  std::vector<int> ext(2 * target.size() + 1, kBlankId);
  for (size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

void check_pair(const Tensor& logits, std::span<const int> target) {
  if (logits.ndim() != 2) {
    throw ShapeError("ctc: frame logits must be (T, V), got " +
                     shape_str(logits.shape()));
  }
  const int64_t v = logits.dim(1);
  for (int id : target) {
    if (id <= kBlankId || id >= v) {
      throw Error("ctc: target id " + std::to_string(id) +
                  " outside label range [1," + std::to_string(v) + ")");
    }
  }
  if (!feasible(logits.dim(0), target)) {
    throw InfeasiblePairError(
        "ctc: target of minimum alignment length " +
        std::to_string(min_alignment_length(target)) + " cannot fit in " +
        std::to_string(logits.dim(0)) + " frames");
  }
}

}  // namespace

int64_t min_alignment_length(std::span<const int> target) {
  int64_t len = static_cast<int64_t>(target.size());
  for (size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++len;
  }
  return len;
}

Tensor ctc_loss(const Tensor& frame_logits, std::span<const int> target,
                double label_smoothing) {
  check_pair(frame_logits, target);
  const int64_t t_frames = frame_logits.dim(0);
  const int64_t vocab = frame_logits.dim(1);
  const std::vector<int> ext = extended_labels(target);
  const int64_t s_states = static_cast<int64_t>(ext.size());

  // Log-probabilities per frame.
  std::vector<double> lp(static_cast<size_t>(t_frames * vocab));
  const double* xp = frame_logits.values().data();
  for (int64_t t = 0; t < t_frames; ++t) {
    kernels::log_softmax_row(xp + t * vocab, lp.data() + t * vocab, vocab);
  }

  auto skip_into = [&](int64_t s) {
    // A jump from s-2 to s is legal when s carries a label that differs
    // from the label at s-2.
    return s >= 2 && ext[s] != kBlankId && ext[s] != ext[s - 2];
  };

  // Forward pass.
  std::vector<double> alpha(static_cast<size_t>(t_frames * s_states), kNegInf);
  alpha[0] = lp[kBlankId];
  if (s_states > 1) alpha[1] = lp[ext[1]];
  for (int64_t t = 1; t < t_frames; ++t) {
    const double* prev = alpha.data() + (t - 1) * s_states;
    double* cur = alpha.data() + t * s_states;
    const double* lpt = lp.data() + t * vocab;
    for (int64_t s = 0; s < s_states; ++s) {
      double acc = prev[s];
      if (s >= 1) acc = log_add(acc, prev[s - 1]);
      if (skip_into(s)) acc = log_add(acc, prev[s - 2]);
      cur[s] = acc + lpt[ext[s]];
    }
  }
  const double* last = alpha.data() + (t_frames - 1) * s_states;
  double log_p = last[s_states - 1];
  if (s_states > 1) log_p = log_add(log_p, last[s_states - 2]);
  if (!std::isfinite(log_p)) {
    throw Error("ctc: non-finite path probability");
  }
  const double nll_value = -log_p;

  Tensor nll = Tensor::scalar(nll_value);
  nll.set_requires_grad(recording({frame_logits}));

  if (nll.requires_grad()) {
    // Backward pass for the analytic gradient: beta excludes the frame-t
    // emission, so alpha_t(s) + beta_t(s) sums to log_p over s at every t.
    std::vector<double> beta(static_cast<size_t>(t_frames * s_states),
                             kNegInf);
    double* bl = beta.data() + (t_frames - 1) * s_states;
    bl[s_states - 1] = 0.0;
    if (s_states > 1) bl[s_states - 2] = 0.0;
    for (int64_t t = t_frames - 2; t >= 0; --t) {
      const double* next = beta.data() + (t + 1) * s_states;
      double* cur = beta.data() + t * s_states;
      const double* lpn = lp.data() + (t + 1) * vocab;
      for (int64_t s = 0; s < s_states; ++s) {
        double acc = next[s] + lpn[ext[s]];
        if (s + 1 < s_states) {
          acc = log_add(acc, next[s + 1] + lpn[ext[s + 1]]);
        }
        if (s + 2 < s_states && skip_into(s + 2)) {
          acc = log_add(acc, next[s + 2] + lpn[ext[s + 2]]);
        }
        cur[s] = acc;
      }
    }

    // d(nll)/d(logit[t][v]) = softmax(logit[t])[v] - sum of the state
    // posteriors that emit v at t.
    auto grad = std::make_shared<std::vector<double>>(
        static_cast<size_t>(t_frames * vocab));
    for (int64_t t = 0; t < t_frames; ++t) {
      double* gt = grad->data() + t * vocab;
      const double* lpt = lp.data() + t * vocab;
      for (int64_t v_i = 0; v_i < vocab; ++v_i) gt[v_i] = std::exp(lpt[v_i]);
      const double* at = alpha.data() + t * s_states;
      const double* bt = beta.data() + t * s_states;
      for (int64_t s = 0; s < s_states; ++s) {
        const double post = at[s] + bt[s] - log_p;
        if (post != kNegInf) gt[ext[s]] -= std::exp(post);
      }
    }
    Tape::current()->record("ctc_nll", nll,
                            [frame_logits, grad](std::span<const double> g,
                                                 Tape& tape) {
      auto gx = tape.grad_buffer(frame_logits);
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[0] * (*grad)[i];
    });
  }

  if (label_smoothing == 0.0) return nll;

  // Uniform-prior term: mean_t KL(u || p_t) = -log V - mean over all of
  // log_softmax(logits). Built from graph ops so it differentiates on its
  // own path.
  Tensor lp_node = ops::log_softmax(frame_logits);
  Tensor uniform_kl = ops::add_scalar(ops::scale(ops::mean_all(lp_node), -1.0),
                                      -std::log(static_cast<double>(vocab)));
  return ops::add(ops::scale(nll, 1.0 - label_smoothing),
                  ops::scale(uniform_kl, label_smoothing));
}

std::vector<int> collapse(std::span<const int> frame_symbols) {
  std::vector<int> out;
  int prev = CollapseState::kNone;
  for (int sym : frame_symbols) {
    if (sym != kBlankId && sym != prev) out.push_back(sym);
    prev = sym;
  }
  return out;
}

std::optional<int> online_collapse_step(CollapseState& state,
                                        int frame_symbol) {
  const bool emit =
      frame_symbol != kBlankId && frame_symbol != state.last_frame_symbol;
  state.last_frame_symbol = frame_symbol;
  if (emit) return frame_symbol;
  return std::nullopt;
}

std::vector<int> viterbi_align(const Tensor& frame_logits,
                               std::span<const int> target) {
  check_pair(frame_logits, target);
  const int64_t t_frames = frame_logits.dim(0);
  const int64_t vocab = frame_logits.dim(1);
  const std::vector<int> ext = extended_labels(target);
  const int64_t s_states = static_cast<int64_t>(ext.size());

  std::vector<double> lp(static_cast<size_t>(t_frames * vocab));
  const double* xp = frame_logits.values().data();
  for (int64_t t = 0; t < t_frames; ++t) {
    kernels::log_softmax_row(xp + t * vocab, lp.data() + t * vocab, vocab);
  }

  auto skip_into = [&](int64_t s) {
    return s >= 2 && ext[s] != kBlankId && ext[s] != ext[s - 2];
  };

  std::vector<double> score(static_cast<size_t>(t_frames * s_states), kNegInf);
  std::vector<int32_t> back(static_cast<size_t>(t_frames * s_states), -1);
  score[0] = lp[kBlankId];
  if (s_states > 1) score[1] = lp[ext[1]];
  for (int64_t t = 1; t < t_frames; ++t) {
    const double* prev = score.data() + (t - 1) * s_states;
    double* cur = score.data() + t * s_states;
    int32_t* bk = back.data() + t * s_states;
    const double* lpt = lp.data() + t * vocab;
    for (int64_t s = 0; s < s_states; ++s) {
      double best = prev[s];
      int32_t arg = static_cast<int32_t>(s);
      if (s >= 1 && prev[s - 1] > best) {
        best = prev[s - 1];
        arg = static_cast<int32_t>(s - 1);
      }
      if (skip_into(s) && prev[s - 2] > best) {
        best = prev[s - 2];
        arg = static_cast<int32_t>(s - 2);
      }
      cur[s] = best + lpt[ext[s]];
      bk[s] = arg;
    }
  }

  const double* last = score.data() + (t_frames - 1) * s_states;
  int64_t state = s_states - 1;
  if (s_states > 1 && last[s_states - 2] > last[state]) state = s_states - 2;
  std::vector<int> path(static_cast<size_t>(t_frames));
  for (int64_t t = t_frames - 1; t >= 0; --t) {
    path[t] = ext[state];
    if (t > 0) state = back[t * s_states + state];
  }
  return path;
}

}  // namespace simt::ctc
