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

#ifndef SIMT_CHECKPOINT_HPP_
#define SIMT_CHECKPOINT_HPP_

#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "simt/asn.hpp"
#include "simt/model.hpp"

namespace simt {

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AsnConfig& cfg);
AsnConfig asn_config_from_json(const nlohmann::json& j);

// Versioned flat serialization of named parameter tensors plus the state
// needed to resume training bitwise: optimizer moments, step count, and the
// base seed the stateless RNG streams derive from. Values are stored as
// little-endian f64.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  nlohmann::json config;  // model / asn / train snapshot
  int64_t step = 0;
  uint64_t rng_seed = 0;
  double best_val_bleu = -1.0;

  std::vector<std::string> names;  // registration order
  std::map<std::string, Shape> shapes;
  std::map<std::string, std::vector<double>> values;
  // Adam moments; empty when the checkpoint is inference-only.
  std::map<std::string, std::vector<double>> adam_m;
  std::map<std::string, std::vector<double>> adam_v;

  bool has_asn() const;

  // Deep copy of the store's current values.
  static Checkpoint capture(const ParamStore& store);

  // Rebuilds a parameter store holding these values (registration order
  // preserved). drop_asn leaves out asn.* tensors (inference checkpoints).
  std::shared_ptr<ParamStore> to_store(bool drop_asn = false) const;

  void save(const std::string& path, bool drop_asn = false) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace simt

#endif  // SIMT_CHECKPOINT_HPP_
