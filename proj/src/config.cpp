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

#include "simt/config.hpp"

#include <fstream>
#include <sstream>

namespace simt {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

int64_t to_count(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" +
                      value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" +
                      value + "'");
  }
}

uint64_t to_seed(const std::string& key, const std::string& value) {
  const int64_t v = to_count(key, value);
  if (v < 0) throw ConfigError("config: key '" + key + "' needs a seed >= 0");
  return static_cast<uint64_t>(v);
}

}  // namespace

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  bool vocab_given = false;
  std::istringstream in(text);
  std::string raw;
  int64_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }

    if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "gen.vocab_size") {
      cfg.gen.vocab_size = to_count(key, value);
    } else if (key == "gen.len_min") {
      cfg.gen.len_min = to_count(key, value);
    } else if (key == "gen.len_max") {
      cfg.gen.len_max = to_count(key, value);
    } else if (key == "gen.rule") {
      cfg.gen.rule = data::parse_rule(value);
    } else if (key == "gen.swap_window") {
      cfg.gen.swap_window = to_count(key, value);
    } else if (key == "gen.block_distance") {
      cfg.gen.block_distance = to_count(key, value);
    } else if (key == "gen.block_len") {
      cfg.gen.block_len = to_count(key, value);
    } else if (key == "gen.rule_prob") {
      cfg.gen.rule_prob = to_real(key, value);
    } else if (key == "gen.seed") {
      cfg.gen.seed = to_seed(key, value);
    } else if (key == "gen.train_size") {
      cfg.gen_train_size = to_count(key, value);
    } else if (key == "gen.valid_size") {
      cfg.gen_valid_size = to_count(key, value);
    } else if (key == "gen.test_size") {
      cfg.gen_test_size = to_count(key, value);
    } else if (key == "model.vocab_size") {
      cfg.model.vocab_size = to_count(key, value);
      vocab_given = true;
    } else if (key == "model.layers") {
      cfg.model.layers = to_count(key, value);
    } else if (key == "model.embed_dim") {
      cfg.model.embed_dim = to_count(key, value);
    } else if (key == "model.ffn_dim") {
      cfg.model.ffn_dim = to_count(key, value);
    } else if (key == "model.heads") {
      cfg.model.heads = to_count(key, value);
    } else if (key == "model.dropout") {
      cfg.model.dropout = to_real(key, value);
    } else if (key == "model.delay_k") {
      cfg.model.delay_k = to_count(key, value);
    } else if (key == "model.upsample") {
      cfg.model.upsample = to_count(key, value);
    } else if (key == "model.seed") {
      cfg.model.seed = to_seed(key, value);
    } else if (key == "asn.layers") {
      cfg.asn.decoder_layers = to_count(key, value);
    } else if (key == "asn.sinkhorn_iters") {
      cfg.asn.sinkhorn_iters = to_count(key, value);
    } else if (key == "asn.temperature") {
      cfg.asn.temperature = to_real(key, value);
    } else if (key == "asn.noise_factor") {
      cfg.asn.noise_factor = to_real(key, value);
    } else if (key == "asn.context_mask_ratio") {
      cfg.asn.context_mask_ratio = to_real(key, value);
    } else if (key == "asn.seed") {
      cfg.asn.seed = to_seed(key, value);
    } else if (key == "train.max_lr") {
      cfg.train.max_lr = to_real(key, value);
    } else if (key == "train.warmup_steps") {
      cfg.train.warmup_steps = to_count(key, value);
    } else if (key == "train.max_steps") {
      cfg.train.max_steps = to_count(key, value);
    } else if (key == "train.patience_steps") {
      cfg.train.patience_steps = to_count(key, value);
    } else if (key == "train.accumulate_batches") {
      cfg.train.accumulate_batches = to_count(key, value);
    } else if (key == "train.label_smoothing") {
      cfg.train.label_smoothing = to_real(key, value);
    } else if (key == "train.seed") {
      cfg.train.seed = to_seed(key, value);
    } else if (key == "train.max_tokens") {
      cfg.train.max_tokens = to_count(key, value);
    } else if (key == "train.eval_every") {
      cfg.train.eval_every = to_count(key, value);
    } else {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
  }

  if (!vocab_given) {
    cfg.model.vocab_size = data::total_vocab(cfg.gen.vocab_size);
  }
  cfg.gen.validate();
  cfg.model.validate();
  cfg.asn.validate();
  cfg.train.validate();
  if (cfg.gen_train_size < 1 || cfg.gen_valid_size < 1 ||
      cfg.gen_test_size < 1) {
    throw ConfigError("config: corpus sizes must be >= 1");
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str());
}

}  // namespace simt
