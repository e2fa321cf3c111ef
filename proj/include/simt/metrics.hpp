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

#ifndef SIMT_METRICS_HPP_
#define SIMT_METRICS_HPP_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simt/streaming.hpp"

namespace simt::metrics {

// 1-based source/target indices of an aligned word pair.
struct AlignmentLink {
  int64_t source_index;
  int64_t target_index;
};

// Average Lagging over a read schedule g (source tokens read when target
// token t was emitted):
//
//   AL = (1/tau) * sum_{t=1..tau} g(t) - (t-1) / (|y|/|x|),
//   tau = min{ t : g(t) = |x| }.
//
// Throws Error when g is empty, not monotone, exceeds the source length, or
// never reaches it (incomplete trace).
double average_lagging(std::span<const int64_t> g, int64_t source_length,
                       int64_t target_length);

// Computation-aware AL in milliseconds with T_s = 1: d_CA comes from the
// trace's wall-clock stamps, the cutoff from its g values. Throws on an
// unfinished trace.
double al_ca(const StreamTrace& trace);

// Evaluation-loop variants: when no emission has read the full source, the
// cutoff falls back to the last emission (SimulEval behavior) instead of
// throwing. Returns false when the trace has no emissions at all.
bool average_lagging_from_trace(const StreamTrace& trace, double* out);
bool al_ca_from_trace(const StreamTrace& trace, double* out);

using TokenSeq = std::vector<std::string>;

struct BleuScore {
  double score = 0.0;  // 0..100
  std::array<double, 4> precisions{};  // percentages, 1..4-grams
  double brevity_penalty = 1.0;
  int64_t hyp_length = 0;
  int64_t ref_length = 0;
};

// Corpus BLEU: geometric mean of clipped 1..4-gram precisions times the
// brevity penalty; zero counts take exponential smoothing, comparison is
// lowercased. Multiple references clip against the max count and use the
// closest reference length (ties toward the shorter).
BleuScore corpus_bleu(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<std::vector<TokenSeq>>& references);

// Pooled character n-gram statistics for chrF.
class ChrfStats {
 public:
  explicit ChrfStats(int max_order = 6);
  void add(const TokenSeq& hyp_symbols, const TokenSeq& ref_symbols);
  // (1+b^2) * P*R / (b^2*P + R) with P/R averaged over effective orders;
  // returns a value in [0, 1].
  double score(double beta = 2.0) const;

 private:
  int max_order_;
  std::vector<int64_t> hyp_, ref_, match_;
};

// Sentence-level chrF in [0, 1] (report * 100). Symbols are characters for
// text or token ids for synthetic corpora.
double chrf(const TokenSeq& hyp_symbols, const TokenSeq& ref_symbols,
            double beta = 2.0, int max_order = 6);

// Space-excluded characters of a string (the "space:no" convention).
TokenSeq chars_of(const std::string& text);

// Fraction of alignment links with i - k + 1 > j over the corpus.
// Throws Error when there are no links at all.
double k_anticipation_rate(
    const std::vector<std::vector<AlignmentLink>>& links_per_pair, int64_t k);

using CorpusMetricFn = std::function<double(
    const std::vector<TokenSeq>&, const std::vector<std::vector<TokenSeq>>&)>;

struct BootstrapResult {
  double p_value = 1.0;  // fraction of resamples where B >= A
  double mean_a = 0.0, ci_lo_a = 0.0, ci_hi_a = 0.0;
  double mean_b = 0.0, ci_lo_b = 0.0, ci_hi_b = 0.0;
};

// Paired bootstrap resampling over sentences, one-sided.
BootstrapResult paired_bootstrap(const CorpusMetricFn& metric,
                                 const std::vector<TokenSeq>& system_a,
                                 const std::vector<TokenSeq>& system_b,
                                 const std::vector<std::vector<TokenSeq>>& refs,
                                 int64_t resamples, uint64_t seed);

struct SentenceEval {
  int64_t index = 0;
  std::vector<int> hypothesis;
  std::vector<int64_t> g;
  double al = 0.0;
  double al_ca_ms = 0.0;
  bool latency_defined = false;
};

struct EvalReport {
  int64_t delay_k = 1;
  double bleu = 0.0;
  double chrf = 0.0;       // * 100
  double al = 0.0;         // mean over sentences with defined latency
  double al_ca_ms = 0.0;
  BleuScore bleu_details;
  double oracle_bleu = -1.0;  // < 0 when not evaluated
  std::vector<SentenceEval> sentences;
};

// Token ids rendered as strings, for feeding id sequences to BLEU/chrF.
TokenSeq id_tokens(std::span<const int> ids);

}  // namespace simt::metrics

#endif  // SIMT_METRICS_HPP_
