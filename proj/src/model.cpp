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

#include "simt/model.hpp"

#include <cmath>
#include <limits>

namespace simt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) {
    throw ConfigError("model: vocab_size must cover blank and pad, got " +
                      std::to_string(vocab_size));
  }
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0) {
    throw ConfigError("model: embed_dim " + std::to_string(embed_dim) +
                      " must be divisible by heads " + std::to_string(heads));
  }
  if (ffn_dim <= 0 || layers <= 0) {
    throw ConfigError("model: ffn_dim and layers must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("model: dropout must be in [0,1)");
  }
  if (delay_k < 1) throw ConfigError("model: delay_k must be >= 1");
  if (upsample < 1) throw ConfigError("model: upsample must be >= 1");
}

Tensor ParamStore::ensure(const std::string& name, const Shape& shape) {
  auto it = map_.find(name);
  if (it != map_.end()) {
    if (it->second.shape() != shape) {
      throw ShapeError("param " + name + ": stored shape " +
                       shape_str(it->second.shape()) + " does not match " +
                       shape_str(shape));
    }
    return it->second;
  }
  Tensor t = Tensor::zeros(shape, /*requires_grad=*/true);
  map_.emplace(name, t);
  names_.push_back(name);
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end()) throw Error("param " + name + " is not registered");
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : map_) t.zero_grad();
}

int64_t ParamStore::total_values() const {
  int64_t n = 0;
  for (const auto& [name, t] : map_) n += t.numel();
  return n;
}

std::vector<uint8_t> delay_mask(int64_t length, int64_t k) {
  std::vector<uint8_t> allowed(static_cast<size_t>(length * length), 0);
  for (int64_t t = 0; t < length; ++t) {
    const int64_t limit = std::min(t + k - 1, length - 1);  // 0-based
    for (int64_t j = 0; j <= limit; ++j) allowed[t * length + j] = 1;
  }
  return allowed;
}

void sinusoidal_position_row(int64_t t, int64_t d, double* out) {
  for (int64_t i = 0; i < d; i += 2) {
    const double angle =
        static_cast<double>(t) /
        std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
    out[i] = std::sin(angle);
    if (i + 1 < d) out[i + 1] = std::cos(angle);
  }
}

Tensor sinusoidal_positions(int64_t n, int64_t d) {
  Tensor pe = Tensor::zeros({n, d});
  auto v = pe.values_mut();
  for (int64_t t = 0; t < n; ++t) {
    sinusoidal_position_row(t, d, v.data() + t * d);
  }
  return pe;
}

AttentionWeights ensure_attention(ParamStore& store, const std::string& prefix,
                                  int64_t d) {
  AttentionWeights w;
  w.wq = store.ensure(prefix + ".wq", {d, d});
  w.bq = store.ensure(prefix + ".bq", {d});
  w.wk = store.ensure(prefix + ".wk", {d, d});
  w.bk = store.ensure(prefix + ".bk", {d});
  w.wv = store.ensure(prefix + ".wv", {d, d});
  w.bv = store.ensure(prefix + ".bv", {d});
  w.wo = store.ensure(prefix + ".wo", {d, d});
  w.bo = store.ensure(prefix + ".bo", {d});
  return w;
}

FfnWeights ensure_ffn(ParamStore& store, const std::string& prefix, int64_t d,
                      int64_t ffn_dim) {
  FfnWeights w;
  w.w1 = store.ensure(prefix + ".w1", {d, ffn_dim});
  w.b1 = store.ensure(prefix + ".b1", {ffn_dim});
  w.w2 = store.ensure(prefix + ".w2", {ffn_dim, d});
  w.b2 = store.ensure(prefix + ".b2", {d});
  return w;
}

NormWeights ensure_norm(ParamStore& store, const std::string& prefix,
                        int64_t d) {
  NormWeights w;
  w.gain = store.ensure(prefix + ".gain", {d});
  w.bias = store.ensure(prefix + ".bias", {d});
  return w;
}

Tensor multi_head_attention(const AttentionWeights& w, const Tensor& q_in,
                            const Tensor& kv_in, int64_t heads,
                            const std::vector<uint8_t>& allowed) {
  const int64_t nq = q_in.dim(0);
  const int64_t nk = kv_in.dim(0);
  const int64_t d = q_in.dim(1);
  const int64_t dh = d / heads;

  auto split_heads = [&](const Tensor& x, int64_t n) {
    return ops::transpose(ops::reshape(x, {n, heads, dh}), 0, 1);
  };
  Tensor q = split_heads(ops::add(ops::matmul(q_in, w.wq), w.bq), nq);
  Tensor k = split_heads(ops::add(ops::matmul(kv_in, w.wk), w.bk), nk);
  Tensor v = split_heads(ops::add(ops::matmul(kv_in, w.wv), w.bv), nk);

  Tensor scores = ops::scale(ops::matmul(q, ops::transpose(k, -2, -1)),
                             1.0 / std::sqrt(static_cast<double>(dh)));
  if (!allowed.empty()) {
    std::vector<uint8_t> blocked(allowed.size());
    for (size_t i = 0; i < allowed.size(); ++i) blocked[i] = !allowed[i];
    scores = ops::masked_fill(scores, blocked, kNegInf);
  }
  Tensor ctx = ops::matmul(ops::softmax(scores), v);  // (h, nq, dh)
  Tensor merged = ops::reshape(ops::transpose(ctx, 0, 1), {nq, d});
  return ops::add(ops::matmul(merged, w.wo), w.bo);
}

Tensor feed_forward(const FfnWeights& w, const Tensor& x) {
  Tensor h = ops::relu(ops::add(ops::matmul(x, w.w1), w.b1));
  return ops::add(ops::matmul(h, w.w2), w.b2);
}

Model::Model(ModelConfig cfg, std::shared_ptr<ParamStore> store)
    : cfg_(cfg), store_(std::move(store)) {
  cfg_.validate();
  const int64_t d = cfg_.embed_dim;
  embed_ = store_->ensure("enc.embed", {cfg_.vocab_size, d});
  layers_.resize(static_cast<size_t>(cfg_.layers));
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i);
    Layer& l = layers_[static_cast<size_t>(i)];
    l.ln1 = ensure_norm(*store_, p + ".ln1", d);
    l.attn = ensure_attention(*store_, p + ".attn", d);
    l.ln2 = ensure_norm(*store_, p + ".ln2", d);
    l.ffn = ensure_ffn(*store_, p + ".ffn", d, cfg_.ffn_dim);
  }
  ln_out_ = ensure_norm(*store_, "enc.ln_out", d);
  proj_w_ = store_->ensure("proj.w", {d, cfg_.upsample * cfg_.vocab_size});
  proj_b_ = store_->ensure("proj.b", {cfg_.upsample * cfg_.vocab_size});
}

Model Model::fresh(ModelConfig cfg) {
  Model m(cfg, std::make_shared<ParamStore>());
  m.init_parameters(cfg.seed);
  return m;
}

void Model::set_delay(int64_t k) {
  if (k < 1) throw ConfigError("model: delay_k must be >= 1");
  cfg_.delay_k = k;
}

RngStream param_stream(uint64_t seed, const std::string& name) {
  return derive_stream(seed, {0x9a27u, fnv1a(name)});
}

void init_embedding_values(Tensor t, int64_t d, RngStream& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
  auto v = t.values_mut();
  for (auto& x : v) x = rng.gaussian(0.0, stddev);
}

void init_affine_values(Tensor w, int64_t fan_in, int64_t fan_out,
                        RngStream& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  auto v = w.values_mut();
  for (auto& x : v) x = rng.uniform(-limit, limit);
}

namespace {

void init_norm(const NormWeights& n) {
  for (auto& x : Tensor(n.gain).values_mut()) x = 1.0;
  for (auto& x : Tensor(n.bias).values_mut()) x = 0.0;
}

void init_attention(const AttentionWeights& w, int64_t d, uint64_t seed,
                    const std::string& prefix) {
  const std::pair<Tensor, const char*> mats[] = {
      {w.wq, "wq"}, {w.wk, "wk"}, {w.wv, "wv"}, {w.wo, "wo"}};
  for (const auto& [t, tag] : mats) {
    RngStream rng = param_stream(seed, prefix + "." + std::string(tag));
    init_affine_values(t, d, d, rng);
  }
}

void init_ffn(const FfnWeights& w, int64_t d, int64_t ffn_dim, uint64_t seed,
              const std::string& prefix) {
  RngStream r1 = param_stream(seed, prefix + ".w1");
  init_affine_values(w.w1, d, ffn_dim, r1);
  RngStream r2 = param_stream(seed, prefix + ".w2");
  init_affine_values(w.w2, ffn_dim, d, r2);
}

}  // namespace

void Model::init_parameters(uint64_t seed) {
  const int64_t d = cfg_.embed_dim;
  RngStream embed_rng = param_stream(seed, "enc.embed");
  init_embedding_values(embed_, d, embed_rng);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string p = "enc.l" + std::to_string(i);
    Layer& l = layers_[static_cast<size_t>(i)];
    init_norm(l.ln1);
    init_norm(l.ln2);
    init_attention(l.attn, d, seed, p + ".attn");
    init_ffn(l.ffn, d, cfg_.ffn_dim, seed, p + ".ffn");
  }
  init_norm(ln_out_);
  RngStream proj_rng = param_stream(seed, "proj.w");
  init_affine_values(proj_w_, d, cfg_.upsample * cfg_.vocab_size, proj_rng);
}

Tensor Model::encode(std::span<const int> source_ids, const FwdCtx& ctx) const {
  if (source_ids.empty()) throw Error("encode: empty source");
  const int64_t n = static_cast<int64_t>(source_ids.size());
  const int64_t d = cfg_.embed_dim;
  const bool drop = ctx.train && cfg_.dropout > 0.0;
  if (drop && ctx.dropout_rng == nullptr) {
    throw Error("encode: training forward needs a dropout stream");
  }

  Tensor x = ops::add(
      ops::scale(ops::embedding_lookup(embed_, source_ids),
                 std::sqrt(static_cast<double>(d))),
      sinusoidal_positions(n, d));
  if (drop) x = ops::dropout(x, cfg_.dropout, *ctx.dropout_rng);

  for (size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const std::vector<uint8_t> allowed =
        delay_mask(n, i == 0 ? cfg_.delay_k : 1);
    Tensor normed = ops::layer_norm(x, l.ln1.gain, l.ln1.bias);
    Tensor a = multi_head_attention(l.attn, normed, normed, cfg_.heads, allowed);
    if (drop) a = ops::dropout(a, cfg_.dropout, *ctx.dropout_rng);
    x = ops::add(x, a);
    Tensor f = feed_forward(l.ffn, ops::layer_norm(x, l.ln2.gain, l.ln2.bias));
    if (drop) f = ops::dropout(f, cfg_.dropout, *ctx.dropout_rng);
    x = ops::add(x, f);
  }
  return ops::layer_norm(x, ln_out_.gain, ln_out_.bias);
}

Tensor Model::length_project(const Tensor& states) const {
  const int64_t n = states.dim(0);
  Tensor frames = ops::add(ops::matmul(states, proj_w_), proj_b_);
  return ops::reshape(frames, {n * cfg_.upsample, cfg_.vocab_size});
}

}  // namespace simt
