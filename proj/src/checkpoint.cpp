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

#include "simt/checkpoint.hpp"

#include <fstream>

namespace simt {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'M', 'T', 'C', 'K', 'P', '1'};

bool is_asn_name(const std::string& name) {
  return name.rfind("asn.", 0) == 0;
}

}  // namespace

nlohmann::json to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"vocab_size", cfg.vocab_size},
                        {"embed_dim", cfg.embed_dim},
                        {"ffn_dim", cfg.ffn_dim},
                        {"heads", cfg.heads},
                        {"layers", cfg.layers},
                        {"dropout", cfg.dropout},
                        {"delay_k", cfg.delay_k},
                        {"upsample", cfg.upsample},
                        {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int64_t>();
  cfg.embed_dim = j.at("embed_dim").get<int64_t>();
  cfg.ffn_dim = j.at("ffn_dim").get<int64_t>();
  cfg.heads = j.at("heads").get<int64_t>();
  cfg.layers = j.at("layers").get<int64_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.delay_k = j.at("delay_k").get<int64_t>();
  cfg.upsample = j.at("upsample").get<int64_t>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

nlohmann::json to_json(const AsnConfig& cfg) {
  return nlohmann::json{{"decoder_layers", cfg.decoder_layers},
                        {"sinkhorn_iters", cfg.sinkhorn_iters},
                        {"temperature", cfg.temperature},
                        {"noise_factor", cfg.noise_factor},
                        {"context_mask_ratio", cfg.context_mask_ratio},
                        {"seed", cfg.seed}};
}

AsnConfig asn_config_from_json(const nlohmann::json& j) {
  AsnConfig cfg;
  cfg.decoder_layers = j.at("decoder_layers").get<int64_t>();
  cfg.sinkhorn_iters = j.at("sinkhorn_iters").get<int64_t>();
  cfg.temperature = j.at("temperature").get<double>();
  cfg.noise_factor = j.at("noise_factor").get<double>();
  cfg.context_mask_ratio = j.at("context_mask_ratio").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

bool Checkpoint::has_asn() const {
  for (const std::string& n : names) {
    if (is_asn_name(n)) return true;
  }
  return false;
}

Checkpoint Checkpoint::capture(const ParamStore& store) {
  Checkpoint ckpt;
  for (const std::string& name : store.names()) {
    Tensor t = store.get(name);
    ckpt.names.push_back(name);
    ckpt.shapes[name] = t.shape();
    ckpt.values[name] =
        std::vector<double>(t.values().begin(), t.values().end());
  }
  return ckpt;
}

std::shared_ptr<ParamStore> Checkpoint::to_store(bool drop_asn) const {
  auto store = std::make_shared<ParamStore>();
  for (const std::string& name : names) {
    if (drop_asn && is_asn_name(name)) continue;
    Tensor t = store->ensure(name, shapes.at(name));
    const auto& vals = values.at(name);
    std::copy(vals.begin(), vals.end(), t.values_mut().begin());
  }
  return store;
}

void Checkpoint::save(const std::string& path, bool drop_asn) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path);

  nlohmann::json header;
  header["version"] = kVersion;
  header["config"] = config;
  header["step"] = step;
  header["rng_seed"] = rng_seed;
  header["best_val_bleu"] = best_val_bleu;
  nlohmann::json params = nlohmann::json::array();
  std::vector<std::string> kept;
  for (const std::string& name : names) {
    if (drop_asn && is_asn_name(name)) continue;
    kept.push_back(name);
    params.push_back({{"name", name}, {"shape", shapes.at(name)}});
  }
  header["params"] = params;
  const bool with_moments = !adam_m.empty() && !drop_asn;
  header["moments"] = with_moments;

  const std::string header_str = header.dump();
  os.write(kMagic, sizeof(kMagic));
  const uint64_t hsize = header_str.size();
  os.write(reinterpret_cast<const char*>(&hsize), sizeof(hsize));
  os.write(header_str.data(), static_cast<std::streamsize>(hsize));

  auto write_vec = [&](const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  for (const std::string& name : kept) write_vec(values.at(name));
  if (with_moments) {
    for (const std::string& name : kept) write_vec(adam_m.at(name));
    for (const std::string& name : kept) write_vec(adam_v.at(name));
  }
  if (!os) throw IoError("failed writing checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw IoError("not a checkpoint file: " + path);
  }
  uint64_t hsize = 0;
  is.read(reinterpret_cast<char*>(&hsize), sizeof(hsize));
  std::string header_str(hsize, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(hsize));
  if (!is) throw IoError("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(header_str);
  if (header.at("version").get<uint32_t>() != kVersion) {
    throw IoError("unsupported checkpoint version in " + path);
  }

  Checkpoint ckpt;
  ckpt.config = header.at("config");
  ckpt.step = header.at("step").get<int64_t>();
  ckpt.rng_seed = header.at("rng_seed").get<uint64_t>();
  ckpt.best_val_bleu = header.at("best_val_bleu").get<double>();
  for (const auto& p : header.at("params")) {
    const std::string name = p.at("name").get<std::string>();
    ckpt.names.push_back(name);
    ckpt.shapes[name] = p.at("shape").get<Shape>();
  }
  auto read_vec = [&](int64_t count) {
    std::vector<double> v(static_cast<size_t>(count));
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    return v;
  };
  for (const std::string& name : ckpt.names) {
    ckpt.values[name] = read_vec(shape_numel(ckpt.shapes[name]));
  }
  if (header.at("moments").get<bool>()) {
    for (const std::string& name : ckpt.names) {
      ckpt.adam_m[name] = read_vec(shape_numel(ckpt.shapes[name]));
    }
    for (const std::string& name : ckpt.names) {
      ckpt.adam_v[name] = read_vec(shape_numel(ckpt.shapes[name]));
    }
  }
  if (!is) throw IoError("truncated checkpoint payload: " + path);
  return ckpt;
}

}  // namespace simt
