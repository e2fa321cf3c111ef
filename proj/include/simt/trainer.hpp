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

#ifndef SIMT_TRAINER_HPP_
#define SIMT_TRAINER_HPP_

#include <optional>
#include <ostream>

#include "simt/asn.hpp"
#include "simt/checkpoint.hpp"
#include "simt/data.hpp"
#include "simt/metrics.hpp"
#include "simt/model.hpp"

namespace simt {

enum class TrainPhase { kCtcPretrain, kAsnFinetune, kFromScratch };
TrainPhase parse_phase(const std::string& name);
std::string phase_name(TrainPhase phase);

struct TrainConfig {
  double max_lr = 5e-4;
  int64_t warmup_steps = 4000;
  int64_t max_steps = 300000;
  int64_t patience_steps = 25000;
  int64_t accumulate_batches = 1;
  double label_smoothing = 0.1;
  uint64_t seed = 1;
  TrainPhase phase = TrainPhase::kCtcPretrain;
  int64_t max_tokens = 4096;  // source tokens per micro-batch
  int64_t eval_every = 500;   // validation cadence in steps

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Inverse square root schedule with linear warmup:
// lr = max_lr * min(step / warmup, sqrt(warmup / step)).
double lr_schedule(int64_t step, const TrainConfig& cfg);

struct TrainResult {
  Checkpoint best;
  double best_val_bleu = -1.0;
  int64_t best_step = 0;
  int64_t steps_run = 0;
  int64_t skipped_pairs = 0;  // infeasible under the upsample ratio
};

// CTC pretraining of encoder + length projection.
TrainResult train_ctc_baseline(const std::vector<data::SentencePair>& train,
                               const std::vector<data::SentencePair>& valid,
                               const ModelConfig& model_cfg,
                               const TrainConfig& train_cfg,
                               std::ostream* log = nullptr,
                               const Checkpoint* resume = nullptr);

// Fine-tuning with the sorting network in the loop. init, when given,
// seeds encoder + projection from a CTC baseline checkpoint (names and
// shapes must match); the sorting network always starts fresh.
TrainResult train_asn(const std::vector<data::SentencePair>& train,
                      const std::vector<data::SentencePair>& valid,
                      const ModelConfig& model_cfg, const AsnOperator& asn_op,
                      const TrainConfig& train_cfg,
                      const Checkpoint* init = nullptr,
                      std::ostream* log = nullptr,
                      const Checkpoint* resume = nullptr);

// Streams every sentence at each delay k and scores quality and latency.
// fake_clock stamps emissions with their read counts so reports are
// deterministic. with_oracle additionally scores oracle-reordered decoding
// (requires a checkpoint that retains the sorting network).
std::vector<metrics::EvalReport> evaluate(
    const Checkpoint& ckpt, const std::vector<data::SentencePair>& corpus,
    const std::vector<int64_t>& k_values, bool fake_clock = true,
    bool with_oracle = false);

nlohmann::json report_to_json(const metrics::EvalReport& report);

}  // namespace simt

#endif  // SIMT_TRAINER_HPP_
