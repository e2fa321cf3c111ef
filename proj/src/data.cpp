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

#include "simt/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "simt/rng.hpp"

namespace simt::data {

ReorderRule parse_rule(const std::string& name) {
  if (name == "monotonic") return ReorderRule::kMonotonic;
  if (name == "local_swap") return ReorderRule::kLocalSwap;
  if (name == "block_move") return ReorderRule::kBlockMove;
  throw ConfigError("gen: unknown reorder rule '" + name + "'");
}

std::string rule_name(ReorderRule rule) {
  switch (rule) {
    case ReorderRule::kMonotonic: return "monotonic";
    case ReorderRule::kLocalSwap: return "local_swap";
    case ReorderRule::kBlockMove: return "block_move";
  }
  return "monotonic";
}

void GenConfig::validate() const {
  if (vocab_size < 1) throw ConfigError("gen: vocab_size must be >= 1");
  if (len_min < 2) throw ConfigError("gen: len_min must be >= 2");
  if (len_max < len_min) throw ConfigError("gen: len_max must be >= len_min");
  if (rule_prob < 0.0 || rule_prob > 1.0) {
    throw ConfigError("gen: rule_prob must be in [0,1]");
  }
  if (rule == ReorderRule::kLocalSwap && swap_window < 1) {
    throw ConfigError("gen: swap_window must be >= 1");
  }
  if (rule == ReorderRule::kBlockMove) {
    if (block_distance < 1 || block_len < 1) {
      throw ConfigError("gen: block_move needs distance >= 1 and length >= 1");
    }
    if (block_distance + block_len > len_min) {
      throw ConfigError("gen: block_move with distance " +
                        std::to_string(block_distance) + " and length " +
                        std::to_string(block_len) +
                        " does not fit sentences of length " +
                        std::to_string(len_min));
    }
  }
}

bool SentencePair::operator==(const SentencePair& other) const {
  if (source_ids != other.source_ids || target_ids != other.target_ids ||
      oracle_permutation != other.oracle_permutation ||
      oracle_links.size() != other.oracle_links.size()) {
    return false;
  }
  for (size_t i = 0; i < oracle_links.size(); ++i) {
    if (oracle_links[i].source_index != other.oracle_links[i].source_index ||
        oracle_links[i].target_index != other.oracle_links[i].target_index) {
      return false;
    }
  }
  return true;
}

namespace {

// Target-position -> 1-based source position.
std::vector<int64_t> identity_permutation(int64_t n) {
  std::vector<int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 1);
  return perm;
}

std::vector<int64_t> local_swap_permutation(int64_t n, int64_t window,
                                            RngStream& rng) {
  std::vector<int64_t> perm = identity_permutation(n);
  std::vector<uint8_t> used(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    if (!rng.bernoulli(0.5)) continue;
    const int64_t delta = 1 + static_cast<int64_t>(
                                  rng.below(static_cast<uint64_t>(window)));
    const int64_t j = i + delta;
    if (j >= n || used[j]) continue;
    std::swap(perm[i], perm[j]);
    used[i] = used[j] = 1;
  }
  return perm;
}

std::vector<int64_t> block_move_permutation(int64_t n, int64_t distance,
                                            int64_t block, RngStream& rng) {
  // Destination start q; the block occupies source positions
  // [q+d+b-1, q+d+2b-2] and target positions [q, q+b-1].
  const int64_t q_max = n - distance - 2 * block + 2;
  if (q_max < 1) return identity_permutation(n);
  const int64_t q = 1 + static_cast<int64_t>(
                            rng.below(static_cast<uint64_t>(q_max)));
  const int64_t s = q + distance + block - 1;  // block's source start
  std::vector<int64_t> perm;
  perm.reserve(static_cast<size_t>(n));
  for (int64_t i = 1; i < q; ++i) perm.push_back(i);
  for (int64_t m = 0; m < block; ++m) perm.push_back(s + m);
  for (int64_t i = q; i < s; ++i) perm.push_back(i);
  for (int64_t i = s + block; i <= n; ++i) perm.push_back(i);
  return perm;
}

}  // namespace

std::vector<SentencePair> generate_corpus(const GenConfig& cfg, int64_t size) {
  cfg.validate();
  if (size < 1) throw ConfigError("gen: corpus size must be >= 1");
  std::vector<SentencePair> pairs;
  pairs.reserve(static_cast<size_t>(size));
  for (int64_t idx = 0; idx < size; ++idx) {
    RngStream rng = derive_stream(cfg.seed, {0xda7au, static_cast<uint64_t>(idx)});
    const int64_t n =
        cfg.len_min + static_cast<int64_t>(rng.below(
                          static_cast<uint64_t>(cfg.len_max - cfg.len_min + 1)));
    SentencePair pair;
    pair.source_ids.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      pair.source_ids.push_back(source_token(
          static_cast<int64_t>(rng.below(static_cast<uint64_t>(cfg.vocab_size))),
          cfg.vocab_size));
    }

    std::vector<int64_t> perm;
    const bool apply = rng.bernoulli(cfg.rule_prob);
    if (!apply || cfg.rule == ReorderRule::kMonotonic) {
      perm = identity_permutation(n);
    } else if (cfg.rule == ReorderRule::kLocalSwap) {
      perm = local_swap_permutation(n, cfg.swap_window, rng);
    } else {
      perm = block_move_permutation(n, cfg.block_distance, cfg.block_len, rng);
    }

    pair.target_ids.reserve(static_cast<size_t>(n));
    for (int64_t j = 0; j < n; ++j) {
      const int src = pair.source_ids[static_cast<size_t>(perm[j] - 1)];
      pair.target_ids.push_back(transcribe(src, cfg.vocab_size));
      pair.oracle_links.push_back({perm[j], j + 1});
    }
    pair.oracle_permutation = std::move(perm);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

void write_ids(std::ostream& os, const std::vector<int>& ids) {
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) os << ' ';
    os << ids[i];
  }
}

std::vector<int> parse_ids(const std::string& field, int64_t line_no) {
  std::vector<int> ids;
  std::istringstream iss(field);
  std::string tok;
  while (iss >> tok) {
    try {
      size_t pos = 0;
      const int v = std::stoi(tok, &pos);
      if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
      ids.push_back(v);
    } catch (const std::exception&) {
      throw IoError("corpus line " + std::to_string(line_no) +
                    ": bad token '" + tok + "'");
    }
  }
  return ids;
}

}  // namespace

void save_corpus(const std::vector<SentencePair>& pairs,
                 const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write corpus file " + path);
  for (const SentencePair& p : pairs) {
    write_ids(os, p.source_ids);
    os << '\t';
    write_ids(os, p.target_ids);
    if (!p.oracle_links.empty() || !p.oracle_permutation.empty()) {
      os << '\t';
      for (size_t i = 0; i < p.oracle_links.size(); ++i) {
        if (i) os << ' ';
        os << p.oracle_links[i].source_index << '-'
           << p.oracle_links[i].target_index;
      }
    }
    if (!p.oracle_permutation.empty()) {
      os << '\t';
      for (size_t i = 0; i < p.oracle_permutation.size(); ++i) {
        if (i) os << ' ';
        os << p.oracle_permutation[i];
      }
    }
    os << '\n';
  }
}

std::vector<SentencePair> load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read corpus file " + path);
  std::vector<SentencePair> pairs;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 4) {
      throw IoError("corpus line " + std::to_string(line_no) + ": expected 2-4"
                    " tab-separated fields, got " +
                    std::to_string(fields.size()));
    }
    SentencePair p;
    p.source_ids = parse_ids(fields[0], line_no);
    p.target_ids = parse_ids(fields[1], line_no);
    if (fields.size() >= 3 && !fields[2].empty()) {
      std::istringstream iss(fields[2]);
      std::string tok;
      while (iss >> tok) {
        const size_t dash = tok.find('-');
        if (dash == std::string::npos) {
          throw IoError("corpus line " + std::to_string(line_no) +
                        ": bad alignment link '" + tok + "'");
        }
        try {
          const int64_t i = std::stoll(tok.substr(0, dash));
          const int64_t j = std::stoll(tok.substr(dash + 1));
          if (i < 1 || i > static_cast<int64_t>(p.source_ids.size()) || j < 1 ||
              j > static_cast<int64_t>(p.target_ids.size())) {
            throw std::out_of_range(tok);
          }
          p.oracle_links.push_back({i, j});
        } catch (const std::exception&) {
          throw IoError("corpus line " + std::to_string(line_no) +
                        ": bad alignment link '" + tok + "'");
        }
      }
    }
    if (fields.size() == 4 && !fields[3].empty()) {
      std::istringstream iss(fields[3]);
      std::string tok;
      std::vector<uint8_t> seen(p.source_ids.size() + 1, 0);
      while (iss >> tok) {
        try {
          const int64_t v = std::stoll(tok);
          if (v < 1 || v > static_cast<int64_t>(p.source_ids.size()) ||
              seen[static_cast<size_t>(v)]) {
            throw std::out_of_range(tok);
          }
          seen[static_cast<size_t>(v)] = 1;
          p.oracle_permutation.push_back(v);
        } catch (const std::exception&) {
          throw IoError("corpus line " + std::to_string(line_no) +
                        ": bad permutation entry '" + tok + "'");
        }
      }
      if (p.oracle_permutation.size() != p.source_ids.size()) {
        throw IoError("corpus line " + std::to_string(line_no) +
                      ": permutation is not a bijection on the source");
      }
    }
    // filtering: empty sides and over-long pairs are skipped, not errors
    if (p.source_ids.empty() || p.target_ids.empty() ||
        p.source_ids.size() > 1024 || p.target_ids.size() > 1024) {
      continue;
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs,
                                int64_t max_tokens, uint64_t seed) {
  for (const SentencePair& p : pairs) {
    if (static_cast<int64_t>(p.source_ids.size()) > max_tokens) {
      throw Error("make_batches: sentence of " +
                  std::to_string(p.source_ids.size()) +
                  " tokens exceeds the budget of " +
                  std::to_string(max_tokens));
    }
  }
  std::vector<int64_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return pairs[a].source_ids.size() < pairs[b].source_ids.size();
  });

  std::vector<Batch> batches;
  Batch current;
  auto flush = [&]() {
    if (current.pair_indices.empty()) return;
    current.padded_source.assign(
        current.pair_indices.size() * current.max_source_len, kPadId);
    current.padded_target.assign(
        current.pair_indices.size() * current.max_target_len, kPadId);
    for (size_t r = 0; r < current.pair_indices.size(); ++r) {
      const SentencePair& p = pairs[current.pair_indices[r]];
      std::copy(p.source_ids.begin(), p.source_ids.end(),
                current.padded_source.begin() + r * current.max_source_len);
      std::copy(p.target_ids.begin(), p.target_ids.end(),
                current.padded_target.begin() + r * current.max_target_len);
    }
    batches.push_back(std::move(current));
    current = Batch{};
  };
  for (int64_t idx : order) {
    const int64_t len = static_cast<int64_t>(pairs[idx].source_ids.size());
    if (current.total_source_tokens + len > max_tokens) flush();
    current.pair_indices.push_back(idx);
    current.total_source_tokens += len;
    current.max_source_len = std::max(current.max_source_len, len);
    current.max_target_len =
        std::max(current.max_target_len,
                 static_cast<int64_t>(pairs[idx].target_ids.size()));
  }
  flush();

  RngStream rng = derive_stream(seed, {0xba7cu});
  for (size_t i = batches.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(batches[i - 1], batches[j]);
  }
  return batches;
}

}  // namespace simt::data
