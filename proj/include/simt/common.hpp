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

#ifndef SIMT_COMMON_HPP_
#define SIMT_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace simt {

using Shape = std::vector<int64_t>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shapes do not conform to an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user-facing configuration (bad key, bad value, failed invariant).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File-level problems: missing, malformed, unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

// Target cannot be aligned to the available number of frames.
class InfeasiblePairError : public Error {
 public:
  using Error::Error;
};

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

}  // namespace simt

#endif  // SIMT_COMMON_HPP_
