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

#include "simt/trainer.hpp"

#include <cmath>

#include "simt/ctc.hpp"
#include "simt/streaming.hpp"

namespace simt {

TrainPhase parse_phase(const std::string& name) {
  if (name == "ctc_pretrain") return TrainPhase::kCtcPretrain;
  if (name == "asn_finetune") return TrainPhase::kAsnFinetune;
  if (name == "from_scratch") return TrainPhase::kFromScratch;
  throw ConfigError("train: unknown phase '" + name + "'");
}

std::string phase_name(TrainPhase phase) {
  switch (phase) {
    case TrainPhase::kCtcPretrain: return "ctc_pretrain";
    case TrainPhase::kAsnFinetune: return "asn_finetune";
    case TrainPhase::kFromScratch: return "from_scratch";
  }
  return "ctc_pretrain";
}

void TrainConfig::validate() const {
  if (max_lr <= 0.0) throw ConfigError("train: max_lr must be > 0");
  if (warmup_steps < 1) throw ConfigError("train: warmup_steps must be >= 1");
  if (max_steps < 1) throw ConfigError("train: max_steps must be >= 1");
  if (patience_steps < 1) throw ConfigError("train: patience_steps must be >= 1");
  if (accumulate_batches < 1) {
    throw ConfigError("train: accumulate_batches must be >= 1");
  }
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ConfigError("train: label_smoothing must be in [0,1)");
  }
  if (max_tokens < 1) throw ConfigError("train: max_tokens must be >= 1");
  if (eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return nlohmann::json{{"max_lr", cfg.max_lr},
                        {"warmup_steps", cfg.warmup_steps},
                        {"max_steps", cfg.max_steps},
                        {"patience_steps", cfg.patience_steps},
                        {"accumulate_batches", cfg.accumulate_batches},
                        {"label_smoothing", cfg.label_smoothing},
                        {"seed", cfg.seed},
                        {"phase", phase_name(cfg.phase)},
                        {"max_tokens", cfg.max_tokens},
                        {"eval_every", cfg.eval_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.max_lr = j.at("max_lr").get<double>();
  cfg.warmup_steps = j.at("warmup_steps").get<int64_t>();
  cfg.max_steps = j.at("max_steps").get<int64_t>();
  cfg.patience_steps = j.at("patience_steps").get<int64_t>();
  cfg.accumulate_batches = j.at("accumulate_batches").get<int64_t>();
  cfg.label_smoothing = j.at("label_smoothing").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.phase = parse_phase(j.at("phase").get<std::string>());
  cfg.max_tokens = j.at("max_tokens").get<int64_t>();
  cfg.eval_every = j.at("eval_every").get<int64_t>();
  return cfg;
}

double lr_schedule(int64_t step, const TrainConfig& cfg) {
  if (step < 1) throw Error("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.max_lr * std::min(s / w, std::sqrt(w / s));
}

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.98;
constexpr double kAdamEps = 1e-8;

struct AdamState {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> m, v;

  explicit AdamState(const ParamStore& store) : names(store.names()) {
    for (const std::string& n : names) {
      const size_t size = static_cast<size_t>(store.get(n).numel());
      m[n].assign(size, 0.0);
      v[n].assign(size, 0.0);
    }
  }

  void update(ParamStore& store, int64_t step, double lr, double grad_scale) {
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (const std::string& n : names) {
      Tensor p = store.get(n);
      if (!p.has_grad()) continue;
      auto values = p.values_mut();
      auto grad = p.grad();
      auto& mn = m[n];
      auto& vn = v[n];
      for (size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i] * grad_scale;
        mn[i] = kAdamBeta1 * mn[i] + (1.0 - kAdamBeta1) * g;
        vn[i] = kAdamBeta2 * vn[i] + (1.0 - kAdamBeta2) * g * g;
        const double mhat = mn[i] / bc1;
        const double vhat = vn[i] / bc2;
        values[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
      }
    }
  }
};

struct Job {
  const std::vector<data::SentencePair>* train = nullptr;
  const std::vector<data::SentencePair>* valid = nullptr;
  ModelConfig model_cfg;
  std::optional<AsnOperator> asn_op;
  TrainConfig train_cfg;
  const Checkpoint* init = nullptr;
  const Checkpoint* resume = nullptr;
  std::ostream* log = nullptr;
};

double validation_bleu(const Model& model,
                       const std::vector<data::SentencePair>& valid) {
  std::vector<metrics::TokenSeq> hyps;
  std::vector<std::vector<metrics::TokenSeq>> refs;
  hyps.reserve(valid.size());
  refs.reserve(valid.size());
  for (const auto& pair : valid) {
    hyps.push_back(metrics::id_tokens(decode_offline(model, pair.source_ids)));
    refs.push_back({metrics::id_tokens(pair.target_ids)});
  }
  return metrics::corpus_bleu(hyps, refs).score;
}

// Copies encoder + projection tensors from a baseline checkpoint into the
// store; any mismatched or missing name is an error listing the offenders.
void load_encoder_init(const Checkpoint& init, ParamStore& store) {
  std::string problems;
  for (const std::string& name : store.names()) {
    if (name.rfind("enc.", 0) != 0 && name.rfind("proj.", 0) != 0) continue;
    auto it = init.values.find(name);
    if (it == init.values.end()) {
      problems += " missing:" + name;
      continue;
    }
    Tensor t = store.get(name);
    if (init.shapes.at(name) != t.shape()) {
      problems += " shape:" + name;
      continue;
    }
    std::copy(it->second.begin(), it->second.end(), t.values_mut().begin());
  }
  if (!problems.empty()) {
    throw Error("init checkpoint does not match the model:" + problems);
  }
}

Checkpoint snapshot(const ParamStore& store, const Job& job,
                    const AdamState& adam, int64_t step, double best_val) {
  Checkpoint ckpt = Checkpoint::capture(store);
  ckpt.step = step;
  ckpt.rng_seed = job.train_cfg.seed;
  ckpt.best_val_bleu = best_val;
  ckpt.config["model"] = to_json(job.model_cfg);
  ckpt.config["train"] = to_json(job.train_cfg);
  if (job.asn_op) {
    ckpt.config["asn"] = to_json(job.asn_op->config);
    ckpt.config["asn_variant"] = variant_name(job.asn_op->variant);
  }
  ckpt.adam_m = adam.m;
  ckpt.adam_v = adam.v;
  return ckpt;
}

TrainResult run_training(const Job& job) {
  job.model_cfg.validate();
  job.train_cfg.validate();
  const TrainConfig& tcfg = job.train_cfg;

  // Feasibility filter: a target must fit into upsample * |x| frames.
  std::vector<data::SentencePair> pairs;
  int64_t skipped = 0;
  for (const auto& p : *job.train) {
    if (ctc::feasible(
            job.model_cfg.upsample * static_cast<int64_t>(p.source_ids.size()),
            p.target_ids)) {
      pairs.push_back(p);
    } else {
      ++skipped;
    }
  }
  if (pairs.empty()) throw Error("train: no feasible pairs left");
  if (skipped > 0 && job.log) {
    (*job.log) << nlohmann::json{{"warning", "skipped_infeasible_pairs"},
                                 {"count", skipped}}
                      .dump()
               << "\n";
  }

  Model model = Model::fresh(job.model_cfg);
  std::shared_ptr<ParamStore> store = model.store();
  std::optional<SortingNetwork> asn;
  if (job.asn_op) {
    asn.emplace(job.model_cfg, job.asn_op->config, store);
    asn->init_parameters(job.asn_op->config.seed);
  }
  if (job.init != nullptr) load_encoder_init(*job.init, *store);

  AdamState adam(*store);
  int64_t start_step = 0;
  if (job.resume != nullptr) {
    for (const std::string& name : store->names()) {
      auto it = job.resume->values.find(name);
      if (it == job.resume->values.end() ||
          job.resume->shapes.at(name) != store->get(name).shape()) {
        throw Error("resume checkpoint does not match the model: " + name);
      }
      Tensor t = store->get(name);
      std::copy(it->second.begin(), it->second.end(), t.values_mut().begin());
      if (!job.resume->adam_m.empty()) {
        adam.m[name] = job.resume->adam_m.at(name);
        adam.v[name] = job.resume->adam_v.at(name);
      }
    }
    start_step = job.resume->step;
  }

  // Micro-batch schedule is a pure function of (seed, step): global index
  // -> (epoch, index within the epoch's shuffled batch list).
  std::vector<data::Batch> epoch_batches;
  int64_t loaded_epoch = -1;
  auto micro_batch = [&](int64_t global_index) -> const data::Batch& {
    const int64_t per_epoch =
        static_cast<int64_t>(epoch_batches.empty() ? 0 : epoch_batches.size());
    int64_t epoch, offset;
    if (per_epoch == 0) {
      epoch_batches = data::make_batches(pairs, tcfg.max_tokens,
                                         derive_stream(tcfg.seed, {0}).next_u64());
      loaded_epoch = 0;
    }
    const int64_t n = static_cast<int64_t>(epoch_batches.size());
    epoch = global_index / n;
    offset = global_index % n;
    if (epoch != loaded_epoch) {
      epoch_batches = data::make_batches(
          pairs, tcfg.max_tokens,
          derive_stream(tcfg.seed, {static_cast<uint64_t>(epoch)}).next_u64());
      loaded_epoch = epoch;
    }
    return epoch_batches[static_cast<size_t>(offset)];
  };

  TrainResult result;
  result.skipped_pairs = skipped;
  double best_val = -1.0;
  int64_t best_step = 0;
  bool stopped = false;

  for (int64_t step = start_step + 1; step <= tcfg.max_steps; ++step) {
    store->zero_grads();
    double loss_sum = 0.0;
    int64_t sentences = 0;

    for (int64_t acc = 0; acc < tcfg.accumulate_batches; ++acc) {
      const int64_t global = (step - 1) * tcfg.accumulate_batches + acc;
      const data::Batch& batch = micro_batch(global);
      for (size_t slot = 0; slot < batch.pair_indices.size(); ++slot) {
        const data::SentencePair& pair =
            pairs[static_cast<size_t>(batch.pair_indices[slot])];
        const uint64_t slot_tag =
            static_cast<uint64_t>(acc) << 32 | static_cast<uint64_t>(slot);
        RngStream drop_rng = derive_stream(
            tcfg.seed, {static_cast<uint64_t>(step), slot_tag, 1});
        RngStream mask_rng = derive_stream(
            tcfg.seed, {static_cast<uint64_t>(step), slot_tag, 2});
        RngStream noise_rng = derive_stream(
            tcfg.seed, {static_cast<uint64_t>(step), slot_tag, 3});
        FwdCtx ctx{true, &drop_rng};

        Tape tape;
        Tensor hidden = model.encode(pair.source_ids, ctx);
        Tensor logits;
        if (asn) {
          PermutationSample sample = asn->sample_permutation(
              hidden, pair.target_ids, *job.asn_op, mask_rng, noise_rng, ctx);
          logits = model.length_project(apply_permutation(sample.z, hidden));
        } else {
          logits = model.length_project(hidden);
        }
        Tensor loss =
            ctc::ctc_loss(logits, pair.target_ids, tcfg.label_smoothing);
        tape.backward(loss);
        loss_sum += loss.item();
        ++sentences;
      }
    }

    const double lr = lr_schedule(step, tcfg);
    adam.update(*store, step, lr, 1.0 / static_cast<double>(sentences));
    result.steps_run = step;

    const bool eval_now = step % tcfg.eval_every == 0 || step == tcfg.max_steps;
    double val = -1.0;
    if (eval_now) {
      val = validation_bleu(model, *job.valid);
      if (val > best_val) {
        best_val = val;
        best_step = step;
        result.best = snapshot(*store, job, adam, step, best_val);
      } else if (step - best_step >= tcfg.patience_steps) {
        stopped = true;
      }
    }
    if (job.log) {
      nlohmann::json line{{"step", step},
                          {"loss", loss_sum / static_cast<double>(sentences)},
                          {"lr", lr}};
      if (eval_now) line["val_bleu"] = val;
      (*job.log) << line.dump() << "\n";
    }
    if (stopped) break;
  }

  if (best_val < 0.0) {
    best_val = validation_bleu(model, *job.valid);
    best_step = result.steps_run;
    result.best = snapshot(*store, job, adam, result.steps_run, best_val);
  }
  result.best_val_bleu = best_val;
  result.best_step = best_step;
  return result;
}

}  // namespace

TrainResult train_ctc_baseline(const std::vector<data::SentencePair>& train,
                               const std::vector<data::SentencePair>& valid,
                               const ModelConfig& model_cfg,
                               const TrainConfig& train_cfg, std::ostream* log,
                               const Checkpoint* resume) {
  Job job;
  job.train = &train;
  job.valid = &valid;
  job.model_cfg = model_cfg;
  job.train_cfg = train_cfg;
  job.train_cfg.phase = TrainPhase::kCtcPretrain;
  job.log = log;
  job.resume = resume;
  return run_training(job);
}

TrainResult train_asn(const std::vector<data::SentencePair>& train,
                      const std::vector<data::SentencePair>& valid,
                      const ModelConfig& model_cfg, const AsnOperator& asn_op,
                      const TrainConfig& train_cfg, const Checkpoint* init,
                      std::ostream* log, const Checkpoint* resume) {
  Job job;
  job.train = &train;
  job.valid = &valid;
  job.model_cfg = model_cfg;
  job.asn_op = asn_op;
  job.train_cfg = train_cfg;
  if (job.train_cfg.phase == TrainPhase::kCtcPretrain) {
    job.train_cfg.phase = init != nullptr ? TrainPhase::kAsnFinetune
                                          : TrainPhase::kFromScratch;
  }
  job.init = init;
  job.log = log;
  job.resume = resume;
  return run_training(job);
}

std::vector<metrics::EvalReport> evaluate(
    const Checkpoint& ckpt, const std::vector<data::SentencePair>& corpus,
    const std::vector<int64_t>& k_values, bool fake_clock, bool with_oracle) {
  ModelConfig mcfg = model_config_from_json(ckpt.config.at("model"));
  std::shared_ptr<ParamStore> store = ckpt.to_store();
  Model model(mcfg, store);

  std::optional<SortingNetwork> asn;
  if (with_oracle) {
    if (!ckpt.has_asn() || !ckpt.config.contains("asn")) {
      throw Error("evaluate: oracle decoding needs the sorting network, "
                  "but the checkpoint has no asn parameters");
    }
    asn.emplace(mcfg, asn_config_from_json(ckpt.config.at("asn")), store);
  }

  std::vector<std::vector<metrics::TokenSeq>> refs;
  refs.reserve(corpus.size());
  for (const auto& pair : corpus) {
    refs.push_back({metrics::id_tokens(pair.target_ids)});
  }

  std::vector<metrics::EvalReport> reports;
  for (int64_t k : k_values) {
    model.set_delay(k);
    metrics::EvalReport report;
    report.delay_k = k;
    std::vector<metrics::TokenSeq> hyps;
    hyps.reserve(corpus.size());
    double al_sum = 0.0, al_ca_sum = 0.0;
    int64_t defined = 0;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& pair = corpus[i];
      auto [tokens, trace] =
          fake_clock ? stream_translate_identity_clock(model, pair.source_ids)
                     : stream_translate(model, pair.source_ids);
      metrics::SentenceEval se;
      se.index = static_cast<int64_t>(i);
      se.hypothesis = tokens;
      se.g = trace.g_schedule();
      double al = 0.0, ca = 0.0;
      if (metrics::average_lagging_from_trace(trace, &al) &&
          metrics::al_ca_from_trace(trace, &ca)) {
        se.al = al;
        se.al_ca_ms = ca;
        se.latency_defined = true;
        al_sum += al;
        al_ca_sum += ca;
        ++defined;
      }
      hyps.push_back(metrics::id_tokens(tokens));
      report.sentences.push_back(std::move(se));
    }
    report.bleu_details = metrics::corpus_bleu(hyps, refs);
    report.bleu = report.bleu_details.score;
    metrics::ChrfStats chrf_stats;
    for (size_t i = 0; i < corpus.size(); ++i) {
      chrf_stats.add(hyps[i], refs[i][0]);
    }
    report.chrf = 100.0 * chrf_stats.score();
    if (defined > 0) {
      report.al = al_sum / static_cast<double>(defined);
      report.al_ca_ms = al_ca_sum / static_cast<double>(defined);
    }
    if (with_oracle) {
      std::vector<metrics::TokenSeq> oracle_hyps;
      oracle_hyps.reserve(corpus.size());
      for (const auto& pair : corpus) {
        oracle_hyps.push_back(metrics::id_tokens(decode_with_oracle(
            model, *asn, pair.source_ids, pair.target_ids)));
      }
      report.oracle_bleu = metrics::corpus_bleu(oracle_hyps, refs).score;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

nlohmann::json report_to_json(const metrics::EvalReport& report) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& se : report.sentences) {
    sentences.push_back({{"index", se.index},
                         {"hypothesis", se.hypothesis},
                         {"g", se.g},
                         {"al", se.al},
                         {"al_ca_ms", se.al_ca_ms},
                         {"latency_defined", se.latency_defined}});
  }
  nlohmann::json j{{"k", report.delay_k},
                   {"bleu", report.bleu},
                   {"chrf", report.chrf},
                   {"al", report.al},
                   {"al_ca_ms", report.al_ca_ms},
                   {"precisions", report.bleu_details.precisions},
                   {"brevity_penalty", report.bleu_details.brevity_penalty},
                   {"sentences", sentences}};
  if (report.oracle_bleu >= 0.0) j["oracle_bleu"] = report.oracle_bleu;
  return j;
}

}  // namespace simt
