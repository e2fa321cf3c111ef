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

#ifndef SIMT_CONFIG_HPP_
#define SIMT_CONFIG_HPP_

#include <string>

#include "simt/asn.hpp"
#include "simt/data.hpp"
#include "simt/model.hpp"
#include "simt/trainer.hpp"

namespace simt {

// Plain-text run configuration: one `key = value` per line, '#' comments,
// sections by dotted prefixes (gen., model., asn., train.). Unknown keys
// are rejected; every value is validated against its type's invariants at
// parse time. model.vocab_size defaults to the id space implied by the
// generator settings.
struct RunConfig {
  data::GenConfig gen;
  int64_t gen_train_size = 20000;
  int64_t gen_valid_size = 500;
  int64_t gen_test_size = 500;
  ModelConfig model;
  AsnConfig asn;
  TrainConfig train;
  std::string out_dir = ".";

  static RunConfig parse_string(const std::string& text);
  static RunConfig parse_file(const std::string& path);
};

}  // namespace simt

#endif  // SIMT_CONFIG_HPP_
