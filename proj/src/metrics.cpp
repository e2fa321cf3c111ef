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

#include "simt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "simt/rng.hpp"

namespace simt::metrics {

namespace {

void check_schedule(std::span<const int64_t> g, int64_t source_length) {
  if (g.empty()) throw Error("average_lagging: empty schedule");
  int64_t prev = 0;
  for (int64_t v : g) {
    if (v < prev) throw Error("average_lagging: schedule must be monotone");
    if (v > source_length) {
      throw Error("average_lagging: g exceeds the source length");
    }
    prev = v;
  }
}

double al_of_schedule(std::span<const int64_t> g, int64_t cutoff,
                      int64_t source_length, int64_t target_length) {
  const double rate =
      static_cast<double>(target_length) / static_cast<double>(source_length);
  double sum = 0.0;
  for (int64_t t = 1; t <= cutoff; ++t) {
    sum += static_cast<double>(g[t - 1]) - static_cast<double>(t - 1) / rate;
  }
  return sum / static_cast<double>(cutoff);
}

double al_ca_of_trace(const StreamTrace& trace, int64_t cutoff) {
  const double rate = static_cast<double>(trace.emissions.size()) /
                      static_cast<double>(trace.source_length);
  double sum = 0.0;
  for (int64_t i = 1; i <= cutoff; ++i) {
    sum += trace.emissions[i - 1].ms - static_cast<double>(i - 1) / rate;
  }
  return sum / static_cast<double>(cutoff);
}

int64_t strict_cutoff(std::span<const int64_t> g, int64_t source_length) {
  for (size_t t = 0; t < g.size(); ++t) {
    if (g[t] == source_length) return static_cast<int64_t>(t + 1);
  }
  throw Error("average_lagging: schedule never reads the full source");
}

}  // namespace

double average_lagging(std::span<const int64_t> g, int64_t source_length,
                       int64_t target_length) {
  check_schedule(g, source_length);
  const int64_t cutoff = strict_cutoff(g, source_length);
  return al_of_schedule(g, cutoff, source_length, target_length);
}

double al_ca(const StreamTrace& trace) {
  if (!trace.finished) throw Error("al_ca: trace is not finished");
  const auto g = trace.g_schedule();
  check_schedule(g, trace.source_length);
  const int64_t cutoff = strict_cutoff(g, trace.source_length);
  return al_ca_of_trace(trace, cutoff);
}

bool average_lagging_from_trace(const StreamTrace& trace, double* out) {
  if (trace.emissions.empty() || trace.source_length == 0) return false;
  const auto g = trace.g_schedule();
  int64_t cutoff = static_cast<int64_t>(g.size());
  for (size_t t = 0; t < g.size(); ++t) {
    if (g[t] == trace.source_length) {
      cutoff = static_cast<int64_t>(t + 1);
      break;
    }
  }
  *out = al_of_schedule(g, cutoff, trace.source_length,
                        static_cast<int64_t>(g.size()));
  return true;
}

bool al_ca_from_trace(const StreamTrace& trace, double* out) {
  if (trace.emissions.empty() || trace.source_length == 0) return false;
  const auto g = trace.g_schedule();
  int64_t cutoff = static_cast<int64_t>(g.size());
  for (size_t t = 0; t < g.size(); ++t) {
    if (g[t] == trace.source_length) {
      cutoff = static_cast<int64_t>(t + 1);
      break;
    }
  }
  *out = al_ca_of_trace(trace, cutoff);
  return true;
}

namespace {

std::string lowercased(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// n-grams as separator-joined keys
void count_ngrams(const TokenSeq& tokens, int n,
                  std::unordered_map<std::string, int64_t>* counts) {
  if (static_cast<int>(tokens.size()) < n) return;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++(*counts)[key];
  }
}

}  // namespace

BleuScore corpus_bleu(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<std::vector<TokenSeq>>& references) {
  if (hypotheses.empty() || hypotheses.size() != references.size()) {
    throw Error("bleu: empty corpus or hypothesis/reference count mismatch");
  }
  BleuScore result;
  std::array<int64_t, 4> total{};
  std::array<int64_t, 4> correct{};

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    if (references[s].empty()) {
      throw Error("bleu: sentence " + std::to_string(s) + " has no reference");
    }
    TokenSeq hyp;
    hyp.reserve(hypotheses[s].size());
    for (const auto& t : hypotheses[s]) hyp.push_back(lowercased(t));
    std::vector<TokenSeq> refs;
    for (const auto& r : references[s]) {
      TokenSeq rl;
      rl.reserve(r.size());
      for (const auto& t : r) rl.push_back(lowercased(t));
      refs.push_back(std::move(rl));
    }

    result.hyp_length += static_cast<int64_t>(hyp.size());
    // closest reference length, ties toward the shorter
    int64_t best_ref = static_cast<int64_t>(refs[0].size());
    for (const auto& r : refs) {
      const int64_t len = static_cast<int64_t>(r.size());
      const int64_t diff = std::abs(len - static_cast<int64_t>(hyp.size()));
      const int64_t best_diff =
          std::abs(best_ref - static_cast<int64_t>(hyp.size()));
      if (diff < best_diff || (diff == best_diff && len < best_ref)) {
        best_ref = len;
      }
    }
    result.ref_length += best_ref;

    for (int n = 1; n <= 4; ++n) {
      std::unordered_map<std::string, int64_t> hyp_counts;
      count_ngrams(hyp, n, &hyp_counts);
      std::unordered_map<std::string, int64_t> max_ref_counts;
      for (const auto& r : refs) {
        std::unordered_map<std::string, int64_t> rc;
        count_ngrams(r, n, &rc);
        for (const auto& [key, c] : rc) {
          auto& m = max_ref_counts[key];
          m = std::max(m, c);
        }
      }
      for (const auto& [key, c] : hyp_counts) {
        total[n - 1] += c;
        auto it = max_ref_counts.find(key);
        if (it != max_ref_counts.end()) {
          correct[n - 1] += std::min(c, it->second);
        }
      }
    }
  }

  // exponential smoothing for zero match counts
  double smooth = 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < 4; ++n) {
    double p = 0.0;
    if (total[n] > 0) {
      if (correct[n] > 0) {
        p = 100.0 * static_cast<double>(correct[n]) /
            static_cast<double>(total[n]);
      } else {
        smooth *= 2.0;
        p = 100.0 / (smooth * static_cast<double>(total[n]));
      }
    }
    result.precisions[n] = p;
    if (p <= 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (result.hyp_length == 0 || zero) {
    result.score = 0.0;
    result.brevity_penalty =
        result.hyp_length == 0
            ? 0.0
            : (result.hyp_length >= result.ref_length
                   ? 1.0
                   : std::exp(1.0 - static_cast<double>(result.ref_length) /
                                        static_cast<double>(result.hyp_length)));
    return result;
  }
  result.brevity_penalty =
      result.hyp_length >= result.ref_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(result.ref_length) /
                               static_cast<double>(result.hyp_length));
  result.score = result.brevity_penalty * std::exp(log_sum / 4.0);
  return result;
}

ChrfStats::ChrfStats(int max_order)
    : max_order_(max_order),
      hyp_(static_cast<size_t>(max_order), 0),
      ref_(static_cast<size_t>(max_order), 0),
      match_(static_cast<size_t>(max_order), 0) {}

void ChrfStats::add(const TokenSeq& hyp_symbols, const TokenSeq& ref_symbols) {
  for (int n = 1; n <= max_order_; ++n) {
    std::unordered_map<std::string, int64_t> hc, rc;
    count_ngrams(hyp_symbols, n, &hc);
    count_ngrams(ref_symbols, n, &rc);
    int64_t hyp_total = 0, ref_total = 0, match = 0;
    for (const auto& [key, c] : hc) hyp_total += c;
    for (const auto& [key, c] : rc) ref_total += c;
    for (const auto& [key, c] : hc) {
      auto it = rc.find(key);
      if (it != rc.end()) match += std::min(c, it->second);
    }
    hyp_[n - 1] += hyp_total;
    ref_[n - 1] += ref_total;
    match_[n - 1] += match;
  }
}

double ChrfStats::score(double beta) const {
  double avg_prec = 0.0, avg_rec = 0.0;
  int effective = 0;
  for (int n = 0; n < max_order_; ++n) {
    if (hyp_[n] > 0 && ref_[n] > 0) {
      avg_prec += static_cast<double>(match_[n]) / static_cast<double>(hyp_[n]);
      avg_rec += static_cast<double>(match_[n]) / static_cast<double>(ref_[n]);
      ++effective;
    }
  }
  if (effective == 0) return 0.0;
  avg_prec /= effective;
  avg_rec /= effective;
  const double denom = beta * beta * avg_prec + avg_rec;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta * beta) * avg_prec * avg_rec / denom;
}

double chrf(const TokenSeq& hyp_symbols, const TokenSeq& ref_symbols,
            double beta, int max_order) {
  if (ref_symbols.empty()) throw Error("chrf: empty reference");
  ChrfStats stats(max_order);
  stats.add(hyp_symbols, ref_symbols);
  return stats.score(beta);
}

TokenSeq chars_of(const std::string& text) {
  TokenSeq out;
  for (char c : text) {
    if (c == ' ') continue;
    out.push_back(std::string(1, c));
  }
  return out;
}

double k_anticipation_rate(
    const std::vector<std::vector<AlignmentLink>>& links_per_pair, int64_t k) {
  if (k < 1) throw Error("k_anticipation_rate: k must be >= 1");
  int64_t total = 0, anticipations = 0;
  for (const auto& links : links_per_pair) {
    for (const AlignmentLink& l : links) {
      ++total;
      if (l.source_index - k + 1 > l.target_index) ++anticipations;
    }
  }
  if (total == 0) throw Error("k_anticipation_rate: no alignment links");
  return static_cast<double>(anticipations) / static_cast<double>(total);
}

BootstrapResult paired_bootstrap(const CorpusMetricFn& metric,
                                 const std::vector<TokenSeq>& system_a,
                                 const std::vector<TokenSeq>& system_b,
                                 const std::vector<std::vector<TokenSeq>>& refs,
                                 int64_t resamples, uint64_t seed) {
  if (system_a.size() != system_b.size() || system_a.size() != refs.size()) {
    throw Error("paired_bootstrap: sentence counts do not match");
  }
  if (system_a.empty() || resamples < 1) {
    throw Error("paired_bootstrap: nothing to resample");
  }
  const size_t n = system_a.size();
  RngStream rng = derive_stream(seed, {0xb007u});

  std::vector<double> scores_a, scores_b;
  scores_a.reserve(static_cast<size_t>(resamples));
  scores_b.reserve(static_cast<size_t>(resamples));
  int64_t b_wins = 0;
  std::vector<TokenSeq> sample_a(n), sample_b(n);
  std::vector<std::vector<TokenSeq>> sample_refs(n);
  for (int64_t r = 0; r < resamples; ++r) {
    for (size_t i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(rng.below(n));
      sample_a[i] = system_a[idx];
      sample_b[i] = system_b[idx];
      sample_refs[i] = refs[idx];
    }
    const double sa = metric(sample_a, sample_refs);
    const double sb = metric(sample_b, sample_refs);
    scores_a.push_back(sa);
    scores_b.push_back(sb);
    if (sb >= sa) ++b_wins;
  }

  auto summarize = [&](std::vector<double>& scores, double* mean, double* lo,
                       double* hi) {
    double m = 0.0;
    for (double s : scores) m += s;
    *mean = m / static_cast<double>(scores.size());
    std::sort(scores.begin(), scores.end());
    const auto pick = [&](double q) {
      const double pos = q * static_cast<double>(scores.size() - 1);
      return scores[static_cast<size_t>(std::llround(pos))];
    };
    *lo = pick(0.025);
    *hi = pick(0.975);
  };

  BootstrapResult out;
  out.p_value =
      static_cast<double>(b_wins) / static_cast<double>(resamples);
  summarize(scores_a, &out.mean_a, &out.ci_lo_a, &out.ci_hi_a);
  summarize(scores_b, &out.mean_b, &out.ci_lo_b, &out.ci_hi_b);
  return out;
}

TokenSeq id_tokens(std::span<const int> ids) {
  TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(std::to_string(id));
  return out;
}

}  // namespace simt::metrics
