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

#ifndef SIMT_COMMANDS_HPP_
#define SIMT_COMMANDS_HPP_

#include <string>
#include <vector>

#include "simt/config.hpp"

// Command implementations behind the CLI; the acceptance suite drives the
// same functions. Every command is a pure function of (config, input files,
// seeds): reruns write identical bytes.
namespace simt::cli {

struct GenPaths {
  std::string train_corpus, valid_corpus, test_corpus, manifest;
};
GenPaths run_gen(const RunConfig& cfg);

struct TrainPaths {
  std::string checkpoint, log, manifest;
  double best_val_bleu = 0.0;
  int64_t steps_run = 0;
};
// phase: ctc_pretrain | asn_finetune | from_scratch; init_checkpoint may be
// empty except for asn_finetune; ablation names a sorting-network variant.
TrainPaths run_train(const RunConfig& cfg, const std::string& phase,
                     const std::string& init_checkpoint,
                     const std::string& ablation = "default",
                     const std::string& tag = "");

struct EvalPaths {
  std::string report, curves_csv, curves_svg;  // svg empty unless requested
};
EvalPaths run_eval(const std::string& checkpoint_path,
                   const std::string& corpus_path,
                   const std::vector<int64_t>& k_values, bool with_oracle,
                   bool real_clock, bool write_svg,
                   const std::string& out_dir);

struct AnalyzePaths {
  std::string anticipation_csv;
  std::vector<std::string> z_heatmaps;  // one CSV per sampled sentence
};
// Corpus-level oracle anticipation curve; with a checkpoint that retains
// the sorting network, also dumps Z matrices with Viterbi-labeled axes for
// the first `sentences` sentences.
AnalyzePaths run_analyze(const std::string& corpus_path,
                         const std::string& checkpoint_path, int64_t k_max,
                         int64_t sentences, const std::string& out_dir);

int main_entry(int argc, char** argv);

}  // namespace simt::cli

#endif  // SIMT_COMMANDS_HPP_
