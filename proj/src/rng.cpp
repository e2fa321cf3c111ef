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

#include "simt/rng.hpp"

#include <cmath>

namespace simt {
namespace {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
  // 53-bit mantissa; nudge 0 up to the smallest representable step.
  double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  if (u <= 0.0) u = 0x1.0p-53;
  return u;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::gaussian(double mean, double stddev) {
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

double RngStream::gumbel() { return -std::log(-std::log(uniform())); }

bool RngStream::bernoulli(double p) { return uniform() < p; }

uint64_t RngStream::below(uint64_t n) {
  // Lemire's multiply-shift; bias is negligible for n << 2^64.
  return static_cast<uint64_t>(
      (static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

RngStream derive_stream(uint64_t base_seed,
                        std::initializer_list<uint64_t> tags) {
  uint64_t s = base_seed ^ 0x6a09e667f3bcc908ULL;
  for (uint64_t tag : tags) {
    s = splitmix64(s) ^ (tag * 0x9e3779b97f4a7c15ULL);
  }
  (void)splitmix64(s);
  return RngStream(s);
}

}  // namespace simt
