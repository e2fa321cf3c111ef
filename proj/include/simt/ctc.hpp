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

#ifndef SIMT_CTC_HPP_
#define SIMT_CTC_HPP_

#include <optional>
#include <span>
#include <vector>

#include "simt/tensor.hpp"

namespace simt::ctc {

// The blank symbol owns vocabulary index 0.
inline constexpr int kBlankId = 0;

// Shortest frame sequence that can align to the target: one frame per label
// plus a separating blank between adjacent repeats.
int64_t min_alignment_length(std::span<const int> target);

inline bool feasible(int64_t frames, std::span<const int> target) {
  return frames >= min_alignment_length(target);
}

// Negative log-likelihood of the target under the frame logits (T, V),
// marginalized over all blank-augmented paths with the forward algorithm in
// log space, interpolated with a uniform-prior regularizer:
//
//   loss = (1 - eps) * nll + eps * mean_t KL(uniform || softmax(logits_t))
//
// Differentiable w.r.t. logits. Throws InfeasiblePairError when the target
// cannot fit in T frames.
Tensor ctc_loss(const Tensor& frame_logits, std::span<const int> target,
                double label_smoothing = 0.0);

// Offline collapse: merge repeats, then drop blanks.
std::vector<int> collapse(std::span<const int> frame_symbols);

// Streaming collapse. Emits a token iff the frame symbol is not blank and
// differs from the previous frame symbol; the state always records the
// current frame symbol. Folding this over a sequence reproduces collapse().
struct CollapseState {
  static constexpr int kNone = -1;
  int last_frame_symbol = kNone;
};
std::optional<int> online_collapse_step(CollapseState& state, int frame_symbol);

// Highest-probability blank-augmented path that collapses to the target;
// one symbol (label or blank) per frame. Throws InfeasiblePairError.
std::vector<int> viterbi_align(const Tensor& frame_logits,
                               std::span<const int> target);

}  // namespace simt::ctc

#endif  // SIMT_CTC_HPP_
