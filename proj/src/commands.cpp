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

#include "simt/commands.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "simt/ctc.hpp"
#include "simt/streaming.hpp"

namespace simt::cli {

namespace fs = std::filesystem;

namespace {

uint64_t content_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot hash missing file " + path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_manifest(const std::string& path, const nlohmann::json& manifest) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest " + path);
  os << manifest.dump(2) << "\n";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

std::vector<data::SentencePair> load_required_corpus(const std::string& path) {
  auto pairs = data::load_corpus(path);
  if (pairs.empty()) throw IoError("corpus " + path + " has no usable pairs");
  return pairs;
}

}  // namespace

GenPaths run_gen(const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  GenPaths paths;
  paths.train_corpus = cfg.out_dir + "/train.tsv";
  paths.valid_corpus = cfg.out_dir + "/valid.tsv";
  paths.test_corpus = cfg.out_dir + "/test.tsv";
  paths.manifest = cfg.out_dir + "/gen_manifest.json";

  const std::pair<const char*, int64_t> splits[] = {
      {"train", cfg.gen_train_size},
      {"valid", cfg.gen_valid_size},
      {"test", cfg.gen_test_size}};
  nlohmann::json manifest_splits;
  uint64_t split_offset = 0;
  for (const auto& [name, size] : splits) {
    data::GenConfig split_cfg = cfg.gen;
    split_cfg.seed = cfg.gen.seed + split_offset;
    const std::string path = cfg.out_dir + "/" + name + ".tsv";
    data::save_corpus(data::generate_corpus(split_cfg, size), path);
    manifest_splits[name] = {{"path", path},
                             {"size", size},
                             {"seed", split_cfg.seed},
                             {"hash", hash_hex(content_hash(path))}};
    ++split_offset;
  }

  nlohmann::json manifest{
      {"command", "gen"},
      {"rule", data::rule_name(cfg.gen.rule)},
      {"vocab_size", cfg.gen.vocab_size},
      {"total_vocab", data::total_vocab(cfg.gen.vocab_size)},
      {"len_min", cfg.gen.len_min},
      {"len_max", cfg.gen.len_max},
      {"rule_prob", cfg.gen.rule_prob},
      {"block_distance", cfg.gen.block_distance},
      {"block_len", cfg.gen.block_len},
      {"swap_window", cfg.gen.swap_window},
      {"base_seed", cfg.gen.seed},
      {"splits", manifest_splits}};
  write_manifest(paths.manifest, manifest);
  return paths;
}

TrainPaths run_train(const RunConfig& cfg, const std::string& phase,
                     const std::string& init_checkpoint,
                     const std::string& ablation, const std::string& tag) {
  ensure_dir(cfg.out_dir);
  const TrainPhase train_phase = parse_phase(phase);
  if (train_phase == TrainPhase::kAsnFinetune && init_checkpoint.empty()) {
    throw ConfigError("train: asn_finetune needs --init <checkpoint>");
  }

  auto train_pairs = load_required_corpus(cfg.out_dir + "/train.tsv");
  auto valid_pairs = load_required_corpus(cfg.out_dir + "/valid.tsv");

  Checkpoint init;
  const Checkpoint* init_ptr = nullptr;
  if (!init_checkpoint.empty()) {
    init = Checkpoint::load(init_checkpoint);
    init_ptr = &init;
  }

  const std::string stem =
      tag.empty() ? phase + (ablation == "default" ? "" : "_" + ablation) : tag;
  TrainPaths paths;
  paths.checkpoint = cfg.out_dir + "/" + stem + ".ckpt";
  paths.log = cfg.out_dir + "/" + stem + ".log.jsonl";
  paths.manifest = cfg.out_dir + "/" + stem + ".manifest.json";

  std::ofstream log(paths.log);
  if (!log) throw IoError("cannot write training log " + paths.log);

  TrainConfig tcfg = cfg.train;
  tcfg.phase = train_phase;
  TrainResult result;
  if (train_phase == TrainPhase::kCtcPretrain) {
    if (ablation != "default") {
      throw ConfigError("train: ablations apply to sorting-network phases");
    }
    result = train_ctc_baseline(train_pairs, valid_pairs, cfg.model, tcfg, &log);
  } else {
    AsnOperator op = ablation_switches(cfg.asn, ablation);
    result = train_asn(train_pairs, valid_pairs, cfg.model, op, tcfg,
                       train_phase == TrainPhase::kAsnFinetune ? init_ptr
                                                               : nullptr,
                       &log);
  }
  result.best.save(paths.checkpoint);

  nlohmann::json manifest{
      {"command", "train"},
      {"phase", phase},
      {"ablation", ablation},
      {"init", init_checkpoint},
      {"seeds",
       {{"model", cfg.model.seed}, {"asn", cfg.asn.seed}, {"train", cfg.train.seed}}},
      {"inputs",
       {{"train.tsv", hash_hex(content_hash(cfg.out_dir + "/train.tsv"))},
        {"valid.tsv", hash_hex(content_hash(cfg.out_dir + "/valid.tsv"))}}},
      {"best_val_bleu", result.best_val_bleu},
      {"best_step", result.best_step},
      {"steps_run", result.steps_run},
      {"skipped_pairs", result.skipped_pairs},
      {"checkpoint", paths.checkpoint},
      {"checkpoint_hash", hash_hex(content_hash(paths.checkpoint))}};
  write_manifest(paths.manifest, manifest);

  paths.best_val_bleu = result.best_val_bleu;
  paths.steps_run = result.steps_run;
  return paths;
}

namespace {

void write_curves_csv(const std::string& path,
                      const std::vector<metrics::EvalReport>& reports) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write curves file " + path);
  bool oracle = false;
  for (const auto& r : reports) oracle = oracle || r.oracle_bleu >= 0;
  os << "k,bleu,chrf,al,al_ca_ms";
  if (oracle) os << ",oracle_bleu";
  os << "\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& r : reports) {
    os << r.delay_k << "," << r.bleu << "," << r.chrf << "," << r.al << ","
       << r.al_ca_ms;
    if (oracle) os << "," << r.oracle_bleu;
    os << "\n";
  }
}

// Minimal latency-quality line plot (AL on x, BLEU on y).
void write_curves_svg(const std::string& path,
                      const std::vector<metrics::EvalReport>& reports) {
  double al_min = 1e18, al_max = -1e18, b_min = 1e18, b_max = -1e18;
  for (const auto& r : reports) {
    al_min = std::min(al_min, r.al);
    al_max = std::max(al_max, r.al);
    b_min = std::min(b_min, r.bleu);
    b_max = std::max(b_max, r.bleu);
  }
  if (al_max <= al_min) al_max = al_min + 1;
  if (b_max <= b_min) b_max = b_min + 1;
  const double w = 480, h = 320, pad = 40;
  auto sx = [&](double al) {
    return pad + (al - al_min) / (al_max - al_min) * (w - 2 * pad);
  };
  auto sy = [&](double b) {
    return h - pad - (b - b_min) / (b_max - b_min) * (h - 2 * pad);
  };
  std::ofstream os(path);
  if (!os) throw IoError("cannot write svg file " + path);
  os.precision(2);
  os << std::fixed;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
     << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad
     << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
        "points=\"";
  for (const auto& r : reports) os << sx(r.al) << "," << sy(r.bleu) << " ";
  os << "\"/>\n";
  for (const auto& r : reports) {
    os << "<circle cx=\"" << sx(r.al) << "\" cy=\"" << sy(r.bleu)
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << sx(r.al) + 5 << "\" y=\"" << sy(r.bleu) - 5
       << "\" font-size=\"10\">k=" << r.delay_k << "</text>\n";
  }
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
     << "\" font-size=\"12\" text-anchor=\"middle\">AL (tokens)</text>\n";
  os << "<text x=\"12\" y=\"" << h / 2
     << "\" font-size=\"12\" transform=\"rotate(-90 12 " << h / 2
     << ")\" text-anchor=\"middle\">BLEU</text>\n";
  os << "</svg>\n";
}

}  // namespace

EvalPaths run_eval(const std::string& checkpoint_path,
                   const std::string& corpus_path,
                   const std::vector<int64_t>& k_values, bool with_oracle,
                   bool real_clock, bool write_svg, const std::string& out_dir) {
  ensure_dir(out_dir);
  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  auto corpus = load_required_corpus(corpus_path);
  auto reports =
      evaluate(ckpt, corpus, k_values, /*fake_clock=*/!real_clock, with_oracle);

  EvalPaths paths;
  paths.report = out_dir + "/eval_report.json";
  paths.curves_csv = out_dir + "/curves.csv";
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(report_to_json(r));
  std::ofstream os(paths.report);
  if (!os) throw IoError("cannot write report " + paths.report);
  os << all.dump(2) << "\n";
  write_curves_csv(paths.curves_csv, reports);
  if (write_svg) {
    paths.curves_svg = out_dir + "/curves.svg";
    write_curves_svg(paths.curves_svg, reports);
  }
  return paths;
}

AnalyzePaths run_analyze(const std::string& corpus_path,
                         const std::string& checkpoint_path, int64_t k_max,
                         int64_t sentences, const std::string& out_dir) {
  ensure_dir(out_dir);
  auto corpus = load_required_corpus(corpus_path);

  AnalyzePaths paths;
  paths.anticipation_csv = out_dir + "/anticipation.csv";
  std::vector<std::vector<metrics::AlignmentLink>> links;
  for (const auto& p : corpus) {
    if (!p.oracle_links.empty()) links.push_back(p.oracle_links);
  }
  if (links.empty()) {
    throw Error("analyze: corpus has no alignment links");
  }
  {
    std::ofstream os(paths.anticipation_csv);
    if (!os) throw IoError("cannot write " + paths.anticipation_csv);
    os << "k,anticipation_rate\n";
    os.precision(6);
    os << std::fixed;
    for (int64_t k = 1; k <= k_max; ++k) {
      os << k << "," << metrics::k_anticipation_rate(links, k) << "\n";
    }
  }

  if (checkpoint_path.empty()) return paths;

  Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  if (!ckpt.has_asn() || !ckpt.config.contains("asn")) {
    throw Error("analyze: checkpoint has no sorting network to visualize");
  }
  ModelConfig mcfg = model_config_from_json(ckpt.config.at("model"));
  auto store = ckpt.to_store();
  Model model(mcfg, store);
  SortingNetwork asn(mcfg, asn_config_from_json(ckpt.config.at("asn")), store);

  const int64_t count = std::min<int64_t>(sentences,
                                          static_cast<int64_t>(corpus.size()));
  for (int64_t s = 0; s < count; ++s) {
    const auto& pair = corpus[static_cast<size_t>(s)];
    Tensor hidden = model.encode(pair.source_ids);
    RngStream unused(0);
    Tensor q = asn.compute_q(hidden, pair.target_ids, 0.0, unused);
    AsnOperator op{asn.config(), AsnVariant::kDefault};
    op.config.noise_factor = 0.0;
    RngStream noise(0);
    Tensor z = gumbel_sinkhorn(sinkhorn_attention(q, hidden), op, noise).z;

    // Viterbi axis labels: each reordered position feeds `upsample` frames;
    // label it with the aligned symbols of those frames.
    Tensor logits = model.length_project(apply_permutation(z, hidden));
    std::vector<int> frame_labels;
    bool aligned = false;
    if (ctc::feasible(logits.dim(0), pair.target_ids)) {
      frame_labels = ctc::viterbi_align(logits, pair.target_ids);
      aligned = true;
    }

    const int64_t n = z.dim(0);
    const std::string path =
        out_dir + "/z_" + std::to_string(s) + ".csv";
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    os << "row_label";
    for (int64_t j = 0; j < n; ++j) os << ",src_" << pair.source_ids[j];
    os << "\n";
    os.precision(6);
    os << std::fixed;
    for (int64_t i = 0; i < n; ++i) {
      if (aligned) {
        for (int64_t m = 0; m < mcfg.upsample; ++m) {
          const int sym = frame_labels[static_cast<size_t>(i * mcfg.upsample + m)];
          os << (m ? "|" : "") << sym;
        }
      } else {
        os << "pos_" << i;
      }
      for (int64_t j = 0; j < n; ++j) os << "," << z.values()[i * n + j];
      os << "\n";
    }
    paths.z_heatmaps.push_back(path);
  }
  return paths;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"anticipation-free simultaneous translation toolkit"};
  app.require_subcommand(1);

  std::string config_path, init_path, ablation = "default", phase;
  std::string checkpoint_path, corpus_path, out_dir, k_list = "1,3,5,7,9";
  bool oracle = false, real_clock = false, svg = false;
  int64_t k_max = 9, sentences = 4;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--config", config_path, "run configuration file")
      ->required();

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "run configuration file")
      ->required();
  train->add_option("--phase", phase,
                    "ctc_pretrain | asn_finetune | from_scratch")
      ->required();
  train->add_option("--init", init_path, "baseline checkpoint for fine-tuning");
  train->add_option("--ablation", ablation,
                    "default | no_temperature | no_noise | gumbel_softmax");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--corpus", corpus_path, "corpus file")->required();
  eval_cmd->add_option("--k", k_list, "comma-separated delay values");
  eval_cmd->add_option("--out", out_dir, "output directory")->required();
  eval_cmd->add_flag("--oracle", oracle, "also score oracle reordering");
  eval_cmd->add_flag("--real-clock", real_clock,
                     "wall-clock AL-CA (non-reproducible)");
  eval_cmd->add_flag("--svg", svg, "write a latency-quality SVG plot");

  CLI::App* analyze = app.add_subcommand("analyze", "anticipation and Z plots");
  analyze->add_option("--corpus", corpus_path, "corpus file")->required();
  analyze->add_option("--checkpoint", checkpoint_path,
                      "checkpoint with a sorting network (optional)");
  analyze->add_option("--k-max", k_max, "largest anticipation distance");
  analyze->add_option("--sentences", sentences, "Z matrices to export");
  analyze->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      GenPaths paths = run_gen(RunConfig::parse_file(config_path));
      std::cout << "wrote " << paths.train_corpus << " " << paths.valid_corpus
                << " " << paths.test_corpus << "\n";
    } else if (train->parsed()) {
      TrainPaths paths = run_train(RunConfig::parse_file(config_path), phase,
                                   init_path, ablation);
      std::cout << "checkpoint " << paths.checkpoint << " (val BLEU "
                << paths.best_val_bleu << ", " << paths.steps_run
                << " steps)\n";
    } else if (eval_cmd->parsed()) {
      std::vector<int64_t> ks;
      std::stringstream ss(k_list);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) ks.push_back(std::stoll(tok));
      }
      if (ks.empty()) throw ConfigError("eval: empty --k list");
      EvalPaths paths = run_eval(checkpoint_path, corpus_path, ks, oracle,
                                 real_clock, svg, out_dir);
      std::cout << "wrote " << paths.report << " and " << paths.curves_csv
                << "\n";
    } else if (analyze->parsed()) {
      AnalyzePaths paths =
          run_analyze(corpus_path, checkpoint_path, k_max, sentences, out_dir);
      std::cout << "wrote " << paths.anticipation_csv << " and "
                << paths.z_heatmaps.size() << " Z matrices\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace simt::cli
