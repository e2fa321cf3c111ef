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

#ifndef SIMT_RNG_HPP_
#define SIMT_RNG_HPP_

#include <cstdint>
#include <initializer_list>

namespace simt {

// SplitMix64 stream. All randomness in the project flows through named
// streams derived from a base seed, so any component can be replayed in
// isolation regardless of evaluation order. Distribution transforms are
// implemented here (not via <random>) to keep results identical across
// standard libraries.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // Uniform in (0, 1); never returns exactly 0 or 1.
  double uniform();
  double uniform(double lo, double hi);
  // Box-Muller.
  double gaussian(double mean = 0.0, double stddev = 1.0);
  // -log(-log(U)), U ~ uniform(0,1).
  double gumbel();
  bool bernoulli(double p);
  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

 private:
  uint64_t state_;
};

// Mixes tag words into a base seed to derive an independent stream.
// derive_stream(s, {a, b}) != derive_stream(s, {b, a}) in general.
RngStream derive_stream(uint64_t base_seed, std::initializer_list<uint64_t> tags);

}  // namespace simt

#endif  // SIMT_RNG_HPP_
