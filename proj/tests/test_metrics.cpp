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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "simt/metrics.hpp"
#include "simt/streaming.hpp"

using namespace simt;
using namespace simt::metrics;

namespace {

TokenSeq words(std::initializer_list<const char*> toks) {
  TokenSeq out;
  for (const char* t : toks) out.emplace_back(t);
  return out;
}

StreamTrace trace_from(std::vector<int64_t> g, std::vector<double> ms,
                       int64_t src_len) {
  StreamTrace t;
  for (size_t i = 0; i < g.size(); ++i) {
    t.emissions.push_back({1, g[i], ms[i]});
  }
  t.source_length = src_len;
  t.target_length = static_cast<int64_t>(g.size());
  t.finished = true;
  return t;
}

}  // namespace

TEST_CASE("wait-k schedules reproduce AL = k when |x| = |y|") {
  for (int64_t k : {1, 3, 5, 7, 9}) {
    const int64_t n = 10;
    auto g = wait_k_schedule(k, n, n);
    CHECK(average_lagging(g, n, n) == doctest::Approx((double)k).epsilon(1e-12));
  }
}

TEST_CASE("single-token schedule has AL 1") {
  std::vector<int64_t> g = {1};
  CHECK(average_lagging(g, 1, 1) == doctest::Approx(1.0));
}

TEST_CASE("incomplete schedules are rejected") {
  std::vector<int64_t> g = {1, 2, 2};
  CHECK_THROWS_AS(average_lagging(g, 4, 3), Error);
  std::vector<int64_t> bad = {2, 1};
  CHECK_THROWS_AS(average_lagging(bad, 2, 2), Error);
}

TEST_CASE("al_ca equals AL under the identity clock") {
  for (int64_t k : {1, 3, 7}) {
    const int64_t n = 12;
    auto g = wait_k_schedule(k, n, n);
    std::vector<double> ms(g.begin(), g.end());
    StreamTrace t = trace_from(g, ms, n);
    CHECK(al_ca(t) ==
          doctest::Approx(average_lagging(g, n, n)).epsilon(1e-12));
  }
}

TEST_CASE("adding a constant to every stamp shifts al_ca by that constant") {
  auto g = wait_k_schedule(2, 8, 8);
  std::vector<double> ms(g.begin(), g.end());
  StreamTrace t = trace_from(g, ms, 8);
  const double base = al_ca(t);
  for (auto& e : t.emissions) e.ms += 17.5;
  CHECK(al_ca(t) == doctest::Approx(base + 17.5).epsilon(1e-12));
}

TEST_CASE("al_ca of a single emission is its stamp") {
  StreamTrace t = trace_from({4}, {5.0}, 4);
  CHECK(al_ca(t) == doctest::Approx(5.0));
  t.finished = false;
  CHECK_THROWS_AS(al_ca(t), Error);
}

TEST_CASE("identical corpus scores BLEU 100 with BP 1") {
  std::vector<TokenSeq> hyps = {words({"a", "b", "c", "d", "e"}),
                                words({"x", "y", "z", "w", "v"})};
  std::vector<std::vector<TokenSeq>> refs = {{hyps[0]}, {hyps[1]}};
  BleuScore s = corpus_bleu(hyps, refs);
  CHECK(s.score == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(s.brevity_penalty == 1.0);
}

TEST_CASE("brevity penalty hand computation") {
  std::vector<TokenSeq> hyps = {words({"a", "b", "c", "d"})};
  std::vector<std::vector<TokenSeq>> refs = {{words({"a", "b", "c", "d", "e"})}};
  BleuScore s = corpus_bleu(hyps, refs);
  for (double p : s.precisions) CHECK(p == doctest::Approx(100.0));
  CHECK(s.brevity_penalty == doctest::Approx(std::exp(1.0 - 5.0 / 4.0)));
  CHECK(s.score == doctest::Approx(100.0 * std::exp(-0.25)).epsilon(1e-9));
}

TEST_CASE("zero n-gram overlap takes exponential smoothing") {
  std::vector<TokenSeq> hyps = {words({"a", "b", "c", "d"})};
  std::vector<std::vector<TokenSeq>> refs = {{words({"a", "b", "x", "d"})}};
  BleuScore s = corpus_bleu(hyps, refs);
  // 1-gram 3/4, 2-gram 1/3, 3-gram 0/2 -> 100/(2*2), 4-gram 0/1 -> 100/(4*1)
  CHECK(s.precisions[0] == doctest::Approx(75.0));
  CHECK(s.precisions[1] == doctest::Approx(100.0 / 3));
  CHECK(s.precisions[2] == doctest::Approx(25.0));
  CHECK(s.precisions[3] == doctest::Approx(25.0));
  const double expect =
      std::exp((std::log(75.0) + std::log(100.0 / 3) + std::log(25.0) +
                std::log(25.0)) /
               4.0);
  CHECK(s.score == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("bleu is case-insensitive and permutation-invariant over sentences") {
  std::vector<TokenSeq> hyps = {words({"The", "Cat", "Sat", "Down", "Now"}),
                                words({"a", "dog", "ran", "far", "away"})};
  std::vector<std::vector<TokenSeq>> refs = {
      {words({"the", "cat", "sat", "down", "now"})},
      {words({"a", "dog", "ran", "off", "away"})}};
  BleuScore s1 = corpus_bleu(hyps, refs);
  std::swap(hyps[0], hyps[1]);
  std::swap(refs[0], refs[1]);
  BleuScore s2 = corpus_bleu(hyps, refs);
  CHECK(s1.score == doctest::Approx(s2.score).epsilon(1e-12));
  CHECK(s1.score > 0.0);
}

TEST_CASE("chrf basics") {
  CHECK(chrf(chars_of("abcdef"), chars_of("abcdef")) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chrf(chars_of("aaa"), chars_of("zzz")) == doctest::Approx(0.0));
  CHECK(chrf(TokenSeq{}, chars_of("ab")) == doctest::Approx(0.0));
  CHECK_THROWS_AS(chrf(chars_of("ab"), TokenSeq{}), Error);
}

TEST_CASE("chrf hand count on hyp 'ab' vs ref 'abc'") {
  // order 1: hyp {a,b} ref {a,b,c}: match 2, P=2/2, R=2/3
  // order 2: hyp {ab} ref {ab,bc}: match 1, P=1/1, R=1/2
  // orders 3..6: no hyp n-grams -> skipped (effective order 2)
  const double p = (1.0 + 1.0) / 2.0;
  const double r = (2.0 / 3.0 + 0.5) / 2.0;
  const double beta2 = 4.0;
  const double expect = (1 + beta2) * p * r / (beta2 * p + r);
  CHECK(chrf(chars_of("ab"), chars_of("abc")) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("chrf excludes spaces") {
  CHECK(chrf(chars_of("a b"), chars_of("ab")) == doctest::Approx(1.0));
}

TEST_CASE("anticipation rate counts links with i - k + 1 > j") {
  std::vector<std::vector<AlignmentLink>> links = {{{3, 1}}};
  CHECK(k_anticipation_rate(links, 2) == doctest::Approx(1.0));
  CHECK(k_anticipation_rate(links, 3) == doctest::Approx(0.0));

  // diagonal alignment: never anticipates
  std::vector<std::vector<AlignmentLink>> diag(4);
  for (int64_t s = 0; s < 4; ++s) {
    for (int64_t i = 1; i <= 6; ++i) diag[s].push_back({i, i});
  }
  for (int64_t k = 1; k <= 9; ++k) {
    CHECK(k_anticipation_rate(diag, k) == doctest::Approx(0.0));
  }

  std::vector<std::vector<AlignmentLink>> empty(3);
  CHECK_THROWS_AS(k_anticipation_rate(empty, 1), Error);
}

TEST_CASE("anticipation rate never increases with k") {
  RngStream rng(4);
  std::vector<std::vector<AlignmentLink>> links(20);
  for (auto& sentence : links) {
    const int64_t n = 3 + static_cast<int64_t>(rng.below(8));
    for (int64_t j = 1; j <= n; ++j) {
      sentence.push_back(
          {1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(n))), j});
    }
  }
  double prev = 1.0;
  for (int64_t k = 1; k <= 9; ++k) {
    const double rate = k_anticipation_rate(links, k);
    CHECK(rate <= prev + 1e-12);
    prev = rate;
  }
}

TEST_CASE("paired bootstrap: ties, determinism, and dominance") {
  auto bleu_fn = [](const std::vector<TokenSeq>& h,
                    const std::vector<std::vector<TokenSeq>>& r) {
    return corpus_bleu(h, r).score;
  };
  std::vector<TokenSeq> sys(8), refs_raw(8);
  RngStream rng(10);
  for (size_t i = 0; i < sys.size(); ++i) {
    for (int64_t j = 0; j < 6; ++j) {
      sys[i].push_back(std::to_string(rng.below(5)));
    }
    refs_raw[i] = sys[i];
  }
  std::vector<std::vector<TokenSeq>> refs;
  for (auto& r : refs_raw) refs.push_back({r});

  // identical systems: B >= A in every resample, not significant
  BootstrapResult tie = paired_bootstrap(bleu_fn, sys, sys, refs, 200, 1);
  CHECK(tie.p_value == doctest::Approx(1.0));
  CHECK(tie.mean_a == doctest::Approx(tie.mean_b));

  // determinism
  BootstrapResult again = paired_bootstrap(bleu_fn, sys, sys, refs, 200, 1);
  CHECK(tie.p_value == again.p_value);
  CHECK(tie.ci_lo_a == again.ci_lo_a);

  // A strictly better on every sentence: p <= 1/resamples
  std::vector<TokenSeq> worse = sys;
  for (auto& w : worse) w.back() = "999";
  BootstrapResult dom = paired_bootstrap(bleu_fn, sys, worse, refs, 200, 7);
  CHECK(dom.p_value <= 1.0 / 200);

  std::vector<TokenSeq> short_sys(3);
  CHECK_THROWS_AS(paired_bootstrap(bleu_fn, sys, short_sys, refs, 10, 1),
                  Error);
}
