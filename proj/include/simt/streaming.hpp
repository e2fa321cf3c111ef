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

#ifndef SIMT_STREAMING_HPP_
#define SIMT_STREAMING_HPP_

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "simt/asn.hpp"
#include "simt/ctc.hpp"
#include "simt/model.hpp"

namespace simt {

struct StreamEmission {
  int token;
  int64_t g;  // source tokens read when this token was emitted
  double ms;  // wall clock since stream start
};

struct StreamTrace {
  std::vector<StreamEmission> emissions;
  int64_t source_length = 0;
  int64_t target_length = 0;
  bool finished = false;

  std::vector<int64_t> g_schedule() const;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_ms() const = 0;
};

// Steady clock measured from construction.
class MonotonicClock : public Clock {
 public:
  MonotonicClock();
  double now_ms() const override;

 private:
  double start_ms_;
};

// Injection point for deterministic latency tests.
class ManualClock : public Clock {
 public:
  void set(double ms) { ms_ = ms; }
  double now_ms() const override { return ms_; }

 private:
  double ms_ = 0.0;
};

// Incremental inference engine. Each pushed source token finalizes every
// hidden state whose delay-k window is now complete, projects it into
// upsample-many frames, and streams the frames through the online collapse.
// The arithmetic per row is identical to the full-sentence encoder, so the
// streamed output equals offline decoding exactly.
//
// One stream per instance; end-of-stream is the explicit finish() call.
class StreamingDecoder {
 public:
  StreamingDecoder(const Model& model, const Clock& clock);
  ~StreamingDecoder();
  StreamingDecoder(const StreamingDecoder&) = delete;
  StreamingDecoder& operator=(const StreamingDecoder&) = delete;

  // Feeds one source token; returns the target tokens emitted by it.
  std::vector<int> push(int token_id);
  // Flushes the remaining states (window clipped at the sentence end).
  std::vector<int> finish();

  const std::vector<int>& output() const { return output_; }
  const StreamTrace& trace() const { return trace_; }
  int64_t tokens_consumed() const;
  int64_t states_finalized() const;

 private:
  struct State;
  std::vector<int> finalize_ready(bool at_end);
  std::unique_ptr<State> s_;
  std::vector<int> output_;
  StreamTrace trace_;
};

std::pair<std::vector<int>, StreamTrace> stream_translate(
    const Model& model, std::span<const int> source_ids, const Clock& clock);
// Real monotonic clock.
std::pair<std::vector<int>, StreamTrace> stream_translate(
    const Model& model, std::span<const int> source_ids);
// Deterministic traces for tests and reports: the clock reads exactly g
// milliseconds at every emission.
std::pair<std::vector<int>, StreamTrace> stream_translate_identity_clock(
    const Model& model, std::span<const int> source_ids);

// Full-sentence argmax decode + collapse (the reference for streaming and
// the validation decode during training).
std::vector<int> decode_offline(const Model& model,
                                std::span<const int> source_ids);

// Fixed read-write schedule g(t) = min(t + k - 1, source_length), used to
// calibrate the latency metrics; it drives no model.
std::vector<int64_t> wait_k_schedule(int64_t k, int64_t source_length,
                                     int64_t target_length);

// Diagnostic decode that keeps the sorting network at inference time and
// feeds the reference as its context (mask ratio 0, noise 0): quality upper
// bound of the trained encoder.
std::vector<int> decode_with_oracle(const Model& model,
                                    const SortingNetwork& asn,
                                    std::span<const int> source_ids,
                                    std::span<const int> reference_ids);

}  // namespace simt

#endif  // SIMT_STREAMING_HPP_
