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

#ifndef SIMT_DATA_HPP_
#define SIMT_DATA_HPP_

#include <string>
#include <vector>

#include "simt/metrics.hpp"

namespace simt::data {

// Vocabulary layout: 0 = blank, 1 = pad, [2, 2+n) source words,
// [2+n, 2+2n) their target-side transcriptions. Disjoint source/target
// ranges mimic distinct languages and rule out copy shortcuts.
inline constexpr int kPadId = 1;
inline constexpr int kReservedIds = 2;

inline int64_t total_vocab(int64_t word_types) {
  return kReservedIds + 2 * word_types;
}
inline int source_token(int64_t word, int64_t /*word_types*/) {
  return static_cast<int>(kReservedIds + word);
}
inline int transcribe(int source_id, int64_t word_types) {
  return source_id + static_cast<int>(word_types);
}

enum class ReorderRule { kMonotonic, kLocalSwap, kBlockMove };
ReorderRule parse_rule(const std::string& name);
std::string rule_name(ReorderRule rule);

struct GenConfig {
  int64_t vocab_size = 20;  // distinct source word types
  int64_t len_min = 8;
  int64_t len_max = 14;
  ReorderRule rule = ReorderRule::kMonotonic;
  int64_t swap_window = 2;     // local_swap: max displacement
  int64_t block_distance = 5;  // block_move: d
  int64_t block_len = 2;       // block_move: b
  double rule_prob = 1.0;      // chance a sentence is reordered at all
  uint64_t seed = 1;

  void validate() const;
};

struct SentencePair {
  std::vector<int> source_ids;
  std::vector<int> target_ids;
  std::vector<metrics::AlignmentLink> oracle_links;  // bijective, 1-based
  // 1-based source position feeding each target position; empty = absent.
  std::vector<int64_t> oracle_permutation;

  bool operator==(const SentencePair& other) const;
};

// Source = random word sequence; target = per-token transcription of the
// reordered source. block_move lifts a block of block_len tokens ahead of
// the preceding d+b-1 tokens, so every block token lands d+b-1 positions
// earlier and the oracle anticipation curve reaches zero exactly at
// k = d + b. Sentences too short to host the block stay monotonic.
std::vector<SentencePair> generate_corpus(const GenConfig& cfg, int64_t size);

// One pair per line, UTF-8, tab-separated: source ids, target ids, optional
// "i-j" links, optional permutation. load() rejects (skips) pairs with an
// empty side or more than 1024 tokens; structurally malformed lines throw
// IoError naming the line number.
void save_corpus(const std::vector<SentencePair>& pairs,
                 const std::string& path);
std::vector<SentencePair> load_corpus(const std::string& path);

struct Batch {
  std::vector<int64_t> pair_indices;
  int64_t max_source_len = 0;
  int64_t max_target_len = 0;
  int64_t total_source_tokens = 0;
  // row-major (|pairs|, max_len), padded with kPadId
  std::vector<int> padded_source;
  std::vector<int> padded_target;
};

// Length-bucketed batches holding at most max_tokens source tokens each,
// order shuffled by seed; every pair appears exactly once.
std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs,
                                int64_t max_tokens, uint64_t seed);

}  // namespace simt::data

#endif  // SIMT_DATA_HPP_
