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

#include "simt/asn.hpp"

#include <algorithm>
#include <cmath>

namespace simt {

void AsnConfig::validate() const {
  if (decoder_layers < 1) throw ConfigError("asn: decoder_layers must be >= 1");
  if (sinkhorn_iters < 0) throw ConfigError("asn: sinkhorn_iters must be >= 0");
  if (temperature <= 0.0) throw ConfigError("asn: temperature must be > 0");
  if (noise_factor < 0.0) throw ConfigError("asn: noise_factor must be >= 0");
  if (context_mask_ratio < 0.0 || context_mask_ratio > 1.0) {
    throw ConfigError("asn: context_mask_ratio must be in [0,1]");
  }
}

AsnOperator ablation_switches(const AsnConfig& base, const std::string& name) {
  AsnOperator op{base, AsnVariant::kDefault};
  if (name == "default") {
    return op;
  }
  if (name == "no_temperature") {
    op.config.temperature = 1.0;
    op.variant = AsnVariant::kNoTemperature;
    return op;
  }
  if (name == "no_noise") {
    op.config.noise_factor = 0.0;
    op.variant = AsnVariant::kNoNoise;
    return op;
  }
  if (name == "gumbel_softmax") {
    op.variant = AsnVariant::kGumbelSoftmax;
    return op;
  }
  throw ConfigError("asn: unknown ablation variant '" + name + "'");
}

std::string variant_name(AsnVariant v) {
  switch (v) {
    case AsnVariant::kDefault: return "default";
    case AsnVariant::kNoTemperature: return "no_temperature";
    case AsnVariant::kNoNoise: return "no_noise";
    case AsnVariant::kGumbelSoftmax: return "gumbel_softmax";
  }
  return "default";
}

namespace {

void check_square(const char* op, const Tensor& x) {
  if (x.ndim() != 2 || x.dim(0) != x.dim(1)) {
    throw ShapeError(std::string(op) + ": expected a square matrix, got " +
                     shape_str(x.shape()));
  }
}

// Row normalization in log space is a last-axis log-softmax; column
// normalization is the same through a transpose.
Tensor sinkhorn_log_iterations(Tensor log_x, int64_t iters) {
  for (int64_t i = 0; i < iters; ++i) {
    log_x = ops::log_softmax(log_x);
    log_x = ops::transpose(ops::log_softmax(ops::transpose(log_x)));
  }
  return ops::exp(log_x);
}

}  // namespace

Tensor sinkhorn_normalize(const Tensor& x, int64_t iters) {
  check_square("sinkhorn_normalize", x);
  for (double v : x.values()) {
    if (!std::isfinite(v)) {
      throw Error("sinkhorn_normalize: non-finite input");
    }
  }
  if (iters == 0) return ops::exp(x);
  return sinkhorn_log_iterations(x, iters);
}

PermutationSample gumbel_sinkhorn(const Tensor& scores, const AsnOperator& op,
                                  RngStream& noise_rng, uint64_t noise_seed) {
  check_square("gumbel_sinkhorn", scores);
  const AsnConfig& cfg = op.config;
  if (cfg.temperature <= 0.0) {
    throw Error("gumbel_sinkhorn: temperature must be > 0");
  }
  const int64_t n = scores.dim(0);

  Tensor x = scores;
  if (cfg.noise_factor > 0.0) {
    Tensor noise = Tensor::zeros({n, n});
    for (auto& e : noise.values_mut()) e = noise_rng.gumbel();
    x = ops::add(x, ops::scale(noise, cfg.noise_factor));
  }
  if (cfg.temperature != 1.0) {
    x = ops::scale(x, 1.0 / cfg.temperature);
  }

  Tensor z;
  if (op.variant == AsnVariant::kGumbelSoftmax) {
    z = ops::softmax(x);
  } else if (cfg.sinkhorn_iters == 0) {
    z = ops::exp(x);
  } else {
    z = sinkhorn_log_iterations(x, cfg.sinkhorn_iters);
  }
  return PermutationSample{z, cfg, noise_seed};
}

Tensor sinkhorn_attention(const Tensor& q, const Tensor& h) {
  if (q.ndim() != 2 || h.ndim() != 2 || q.dim(0) != h.dim(0) ||
      q.dim(1) != h.dim(1)) {
    throw ShapeError("sinkhorn_attention: incompatible shapes " +
                     shape_str(q.shape()) + " and " + shape_str(h.shape()));
  }
  const double d_h = static_cast<double>(h.dim(1));
  return ops::scale(ops::matmul(q, ops::transpose(h)), 1.0 / std::sqrt(d_h));
}

Tensor apply_permutation(const Tensor& z, const Tensor& h) {
  check_square("apply_permutation", z);
  if (h.ndim() != 2 || h.dim(0) != z.dim(1)) {
    throw ShapeError("apply_permutation: Z " + shape_str(z.shape()) +
                     " does not act on H " + shape_str(h.shape()));
  }
  return ops::matmul(z, h);
}

std::vector<int64_t> hard_assignment(const Tensor& z) {
  check_square("hard_assignment", z);
  const int64_t n = z.dim(0);
  struct Entry {
    double score;
    int64_t row, col;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(n * n));
  const auto v = z.values();
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      entries.push_back({v[i * n + j], i, j});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  std::vector<int64_t> assign(static_cast<size_t>(n), -1);
  std::vector<uint8_t> col_used(static_cast<size_t>(n), 0);
  int64_t placed = 0;
  for (const Entry& e : entries) {
    if (placed == n) break;
    if (assign[e.row] >= 0 || col_used[e.col]) continue;
    assign[e.row] = e.col;
    col_used[e.col] = 1;
    ++placed;
  }
  return assign;
}

SortingNetwork::SortingNetwork(const ModelConfig& model_cfg, AsnConfig cfg,
                               std::shared_ptr<ParamStore> store)
    : model_cfg_(model_cfg), cfg_(cfg), store_(std::move(store)) {
  cfg_.validate();
  const int64_t d = model_cfg_.embed_dim;
  tgt_embed_ = store_->ensure("asn.tgt_embed", {model_cfg_.vocab_size + 1, d});
  layers_.resize(static_cast<size_t>(cfg_.decoder_layers));
  for (int64_t i = 0; i < cfg_.decoder_layers; ++i) {
    const std::string p = "asn.l" + std::to_string(i);
    Layer& l = layers_[static_cast<size_t>(i)];
    l.ln1 = ensure_norm(*store_, p + ".ln1", d);
    l.self_attn = ensure_attention(*store_, p + ".self", d);
    l.ln2 = ensure_norm(*store_, p + ".ln2", d);
    l.cross_attn = ensure_attention(*store_, p + ".cross", d);
    l.ln3 = ensure_norm(*store_, p + ".ln3", d);
    l.ffn = ensure_ffn(*store_, p + ".ffn", d, model_cfg_.ffn_dim);
  }
  ln_out_ = ensure_norm(*store_, "asn.ln_out", d);
}

namespace {

void init_norm_values(const NormWeights& n) {
  for (auto& x : Tensor(n.gain).values_mut()) x = 1.0;
  for (auto& x : Tensor(n.bias).values_mut()) x = 0.0;
}

}  // namespace

void SortingNetwork::init_parameters(uint64_t seed) {
  const int64_t d = model_cfg_.embed_dim;
  RngStream embed_rng = param_stream(seed, "asn.tgt_embed");
  init_embedding_values(tgt_embed_, d, embed_rng);
  for (size_t i = 0; i < layers_.size(); ++i) {
    const std::string p = "asn.l" + std::to_string(i);
    Layer& l = layers_[i];
    init_norm_values(l.ln1);
    init_norm_values(l.ln2);
    init_norm_values(l.ln3);
    for (const auto& [attn, tag] :
         {std::pair<const AttentionWeights*, const char*>{&l.self_attn, ".self"},
          {&l.cross_attn, ".cross"}}) {
      for (const auto& [w, wtag] :
           {std::pair<Tensor, const char*>{attn->wq, ".wq"},
            {attn->wk, ".wk"},
            {attn->wv, ".wv"},
            {attn->wo, ".wo"}}) {
        RngStream rng = param_stream(seed, p + tag + wtag);
        init_affine_values(w, d, d, rng);
      }
    }
    RngStream r1 = param_stream(seed, p + ".ffn.w1");
    init_affine_values(l.ffn.w1, d, model_cfg_.ffn_dim, r1);
    RngStream r2 = param_stream(seed, p + ".ffn.w2");
    init_affine_values(l.ffn.w2, model_cfg_.ffn_dim, d, r2);
  }
  init_norm_values(ln_out_);
}

Tensor SortingNetwork::compute_q(const Tensor& hidden,
                                 std::span<const int> target_ids, double gamma,
                                 RngStream& mask_rng, const FwdCtx& ctx) const {
  if (target_ids.empty()) throw Error("compute_q: empty target context");
  if (hidden.ndim() != 2 || hidden.dim(1) != model_cfg_.embed_dim) {
    throw ShapeError("compute_q: hidden states " + shape_str(hidden.shape()) +
                     " do not match embed_dim " +
                     std::to_string(model_cfg_.embed_dim));
  }
  const int64_t d = model_cfg_.embed_dim;
  const int mask_id = static_cast<int>(model_cfg_.vocab_size);
  const bool drop = ctx.train && model_cfg_.dropout > 0.0;
  if (drop && ctx.dropout_rng == nullptr) {
    throw Error("compute_q: training forward needs a dropout stream");
  }

  // Context: target embeddings with gamma-masked positions swapped for [M].
  std::vector<int> context_ids(target_ids.begin(), target_ids.end());
  for (auto& id : context_ids) {
    if (id < 0 || id >= model_cfg_.vocab_size) {
      throw Error("compute_q: target id " + std::to_string(id) +
                  " out of vocabulary");
    }
    if (mask_rng.bernoulli(gamma)) id = mask_id;
  }
  Tensor context = ops::add(
      ops::scale(ops::embedding_lookup(tgt_embed_, context_ids),
                 std::sqrt(static_cast<double>(d))),
      sinusoidal_positions(static_cast<int64_t>(context_ids.size()), d));
  if (drop) context = ops::dropout(context, model_cfg_.dropout, *ctx.dropout_rng);

  static const std::vector<uint8_t> kNoMask;
  Tensor s = hidden;
  for (const Layer& l : layers_) {
    Tensor normed = ops::layer_norm(s, l.ln1.gain, l.ln1.bias);
    Tensor a = multi_head_attention(l.self_attn, normed, normed,
                                    model_cfg_.heads, kNoMask);
    if (drop) a = ops::dropout(a, model_cfg_.dropout, *ctx.dropout_rng);
    s = ops::add(s, a);

    Tensor c = multi_head_attention(
        l.cross_attn, ops::layer_norm(s, l.ln2.gain, l.ln2.bias), context,
        model_cfg_.heads, kNoMask);
    if (drop) c = ops::dropout(c, model_cfg_.dropout, *ctx.dropout_rng);
    s = ops::add(s, c);

    Tensor f = feed_forward(l.ffn, ops::layer_norm(s, l.ln3.gain, l.ln3.bias));
    if (drop) f = ops::dropout(f, model_cfg_.dropout, *ctx.dropout_rng);
    s = ops::add(s, f);
  }
  return ops::layer_norm(s, ln_out_.gain, ln_out_.bias);
}

PermutationSample SortingNetwork::sample_permutation(
    const Tensor& hidden, std::span<const int> target_ids,
    const AsnOperator& op, RngStream& mask_rng, RngStream& noise_rng,
    const FwdCtx& ctx, uint64_t noise_seed) const {
  Tensor q = compute_q(hidden, target_ids, op.config.context_mask_ratio,
                       mask_rng, ctx);
  Tensor scores = sinkhorn_attention(q, hidden);
  return gumbel_sinkhorn(scores, op, noise_rng, noise_seed);
}

}  // namespace simt
