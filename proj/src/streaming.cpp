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

#include "simt/streaming.hpp"

#include <chrono>
#include <cmath>

#include "simt/kernels.hpp"

namespace simt {

std::vector<int64_t> StreamTrace::g_schedule() const {
  std::vector<int64_t> g;
  g.reserve(emissions.size());
  for (const auto& e : emissions) g.push_back(e.g);
  return g;
}

MonotonicClock::MonotonicClock() {
  start_ms_ = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now().time_since_epoch())
                  .count();
}

double MonotonicClock::now_ms() const {
  const double now = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now().time_since_epoch())
                         .count();
  return now - start_ms_;
}

namespace {

inline void affine_row(const double* x, const double* w, const double* b,
                       double* out, int64_t in_dim, int64_t out_dim) {
  kernels::mm_nn(x, w, out, 1, in_dim, out_dim);
  for (int64_t i = 0; i < out_dim; ++i) out[i] = out[i] + b[i];
}

int argmax_row(const double* x, int64_t n) {
  int best = 0;
  for (int64_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

struct StreamingDecoder::State {
  const Model* model;
  const Clock* clock;
  ModelConfig cfg;

  struct LayerView {
    Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor w1, b1, w2, b2;
  };
  Tensor embed, lnout_g, lnout_b, proj_w, proj_b;
  std::vector<LayerView> layers;

  // Per-layer caches. Keys/values cover the layer's input rows seen so far:
  // for layer 0 they advance with consumed tokens, for deeper layers with
  // finalized rows.
  struct Cache {
    std::vector<double> k, v;
    int64_t rows = 0;
  };
  std::vector<double> emb;  // (consumed, d)
  std::vector<Cache> cache;
  int64_t consumed = 0;
  int64_t finalized = 0;
  bool done = false;
  ctc::CollapseState collapse;

  // scratch buffers
  std::vector<double> input, normed, q, ctx, attn_out, scores, probs, ffn_h,
      row, h, frames;

  explicit State(const Model& m, const Clock& c)
      : model(&m), clock(&c), cfg(m.config()) {
    const ParamStore& store = *m.store();
    embed = store.get("enc.embed");
    for (int64_t i = 0; i < cfg.layers; ++i) {
      const std::string p = "enc.l" + std::to_string(i);
      LayerView lv;
      lv.ln1_g = store.get(p + ".ln1.gain");
      lv.ln1_b = store.get(p + ".ln1.bias");
      lv.ln2_g = store.get(p + ".ln2.gain");
      lv.ln2_b = store.get(p + ".ln2.bias");
      lv.wq = store.get(p + ".attn.wq");
      lv.bq = store.get(p + ".attn.bq");
      lv.wk = store.get(p + ".attn.wk");
      lv.bk = store.get(p + ".attn.bk");
      lv.wv = store.get(p + ".attn.wv");
      lv.bv = store.get(p + ".attn.bv");
      lv.wo = store.get(p + ".attn.wo");
      lv.bo = store.get(p + ".attn.bo");
      lv.w1 = store.get(p + ".ffn.w1");
      lv.b1 = store.get(p + ".ffn.b1");
      lv.w2 = store.get(p + ".ffn.w2");
      lv.b2 = store.get(p + ".ffn.b2");
      layers.push_back(lv);
    }
    lnout_g = store.get("enc.ln_out.gain");
    lnout_b = store.get("enc.ln_out.bias");
    proj_w = store.get("proj.w");
    proj_b = store.get("proj.b");
    cache.resize(static_cast<size_t>(cfg.layers));

    const int64_t d = cfg.embed_dim;
    input.resize(d);
    normed.resize(d);
    q.resize(d);
    ctx.resize(d);
    attn_out.resize(d);
    ffn_h.resize(static_cast<size_t>(cfg.ffn_dim));
    row.resize(d);
    h.resize(d);
    frames.resize(static_cast<size_t>(cfg.upsample * cfg.vocab_size));
  }

  // Normalize a cached layer-input row and append its key/value rows.
  void append_kv(int64_t layer, const double* in_row) {
    const int64_t d = cfg.embed_dim;
    const LayerView& lv = layers[static_cast<size_t>(layer)];
    Cache& c = cache[static_cast<size_t>(layer)];
    double mean, rstd;
    std::vector<double> nr(static_cast<size_t>(d));
    kernels::layer_norm_row(in_row, nr.data(), d, 1e-5, &mean, &rstd);
    for (int64_t i = 0; i < d; ++i) {
      nr[i] = nr[i] * lv.ln1_g.values()[i] + lv.ln1_b.values()[i];
    }
    const size_t off = c.k.size();
    c.k.resize(off + static_cast<size_t>(d));
    c.v.resize(off + static_cast<size_t>(d));
    affine_row(nr.data(), lv.wk.values().data(), lv.bk.values().data(),
               c.k.data() + off, d, d);
    affine_row(nr.data(), lv.wv.values().data(), lv.bv.values().data(),
               c.v.data() + off, d, d);
    ++c.rows;
  }

  // Runs row t through the full stack. window_end applies to layer 0; later
  // layers attend up to row t.
  void compute_row(int64_t t, int64_t window_end) {
    const int64_t d = cfg.embed_dim;
    const int64_t dh = d / cfg.heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    std::copy(emb.begin() + t * d, emb.begin() + (t + 1) * d, row.begin());
    for (int64_t l = 0; l < cfg.layers; ++l) {
      const LayerView& lv = layers[static_cast<size_t>(l)];
      Cache& c = cache[static_cast<size_t>(l)];
      if (l > 0 && c.rows == t) append_kv(l, row.data());
      const int64_t window = l == 0 ? window_end : t;

      std::copy(row.begin(), row.end(), input.begin());
      double mean, rstd;
      kernels::layer_norm_row(input.data(), normed.data(), d, 1e-5, &mean,
                              &rstd);
      for (int64_t i = 0; i < d; ++i) {
        normed[i] = normed[i] * lv.ln1_g.values()[i] + lv.ln1_b.values()[i];
      }
      affine_row(normed.data(), lv.wq.values().data(), lv.bq.values().data(),
                 q.data(), d, d);
      const int64_t w = window + 1;
      scores.resize(static_cast<size_t>(w));
      probs.resize(static_cast<size_t>(w));
      for (int64_t hh = 0; hh < cfg.heads; ++hh) {
        const int64_t ho = hh * dh;
        for (int64_t j = 0; j < w; ++j) {
          const double* kj = c.k.data() + j * d + ho;
          double s = 0.0;
          for (int64_t p = 0; p < dh; ++p) s += q[ho + p] * kj[p];
          scores[j] = s * inv_sqrt_dh;
        }
        kernels::softmax_row(scores.data(), probs.data(), w);
        for (int64_t p = 0; p < dh; ++p) ctx[ho + p] = 0.0;
        for (int64_t j = 0; j < w; ++j) {
          const double pj = probs[j];
          const double* vj = c.v.data() + j * d + ho;
          for (int64_t p = 0; p < dh; ++p) ctx[ho + p] += pj * vj[p];
        }
      }
      affine_row(ctx.data(), lv.wo.values().data(), lv.bo.values().data(),
                 attn_out.data(), d, d);
      for (int64_t i = 0; i < d; ++i) row[i] = input[i] + attn_out[i];

      kernels::layer_norm_row(row.data(), normed.data(), d, 1e-5, &mean,
                              &rstd);
      for (int64_t i = 0; i < d; ++i) {
        normed[i] = normed[i] * lv.ln2_g.values()[i] + lv.ln2_b.values()[i];
      }
      affine_row(normed.data(), lv.w1.values().data(), lv.b1.values().data(),
                 ffn_h.data(), d, cfg.ffn_dim);
      for (int64_t i = 0; i < cfg.ffn_dim; ++i) {
        ffn_h[i] = ffn_h[i] > 0.0 ? ffn_h[i] : 0.0;
      }
      affine_row(ffn_h.data(), lv.w2.values().data(), lv.b2.values().data(),
                 attn_out.data(), cfg.ffn_dim, d);
      for (int64_t i = 0; i < d; ++i) row[i] = row[i] + attn_out[i];
    }

    double mean, rstd;
    kernels::layer_norm_row(row.data(), h.data(), d, 1e-5, &mean, &rstd);
    for (int64_t i = 0; i < d; ++i) {
      h[i] = h[i] * lnout_g.values()[i] + lnout_b.values()[i];
    }
    affine_row(h.data(), proj_w.values().data(), proj_b.values().data(),
               frames.data(), d, cfg.upsample * cfg.vocab_size);
  }
};

StreamingDecoder::StreamingDecoder(const Model& model, const Clock& clock)
    : s_(std::make_unique<State>(model, clock)) {}

StreamingDecoder::~StreamingDecoder() = default;

int64_t StreamingDecoder::tokens_consumed() const { return s_->consumed; }
int64_t StreamingDecoder::states_finalized() const { return s_->finalized; }

std::vector<int> StreamingDecoder::finalize_ready(bool at_end) {
  std::vector<int> emitted;
  const ModelConfig& cfg = s_->cfg;
  while (true) {
    const int64_t t = s_->finalized;
    int64_t window_end;
    if (at_end) {
      if (t >= s_->consumed) break;
      window_end = std::min(t + cfg.delay_k - 1, s_->consumed - 1);
    } else {
      if (t + cfg.delay_k - 1 > s_->consumed - 1) break;
      window_end = t + cfg.delay_k - 1;
    }
    s_->compute_row(t, window_end);
    for (int64_t m = 0; m < cfg.upsample; ++m) {
      const double* frame = s_->frames.data() + m * cfg.vocab_size;
      const int sym = argmax_row(frame, cfg.vocab_size);
      if (auto tok = ctc::online_collapse_step(s_->collapse, sym)) {
        emitted.push_back(*tok);
        trace_.emissions.push_back(
            StreamEmission{*tok, s_->consumed, s_->clock->now_ms()});
      }
    }
    ++s_->finalized;
  }
  output_.insert(output_.end(), emitted.begin(), emitted.end());
  return emitted;
}

std::vector<int> StreamingDecoder::push(int token_id) {
  if (s_->done) throw Error("stream: push after finish");
  if (token_id < 0 || token_id >= s_->cfg.vocab_size) {
    throw Error("stream: token id " + std::to_string(token_id) +
                " out of vocabulary");
  }
  const int64_t d = s_->cfg.embed_dim;
  const int64_t t = s_->consumed;
  s_->emb.resize(static_cast<size_t>((t + 1) * d));
  double* row = s_->emb.data() + t * d;
  const double* e = s_->embed.values().data() + token_id * d;
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  std::vector<double> pos(static_cast<size_t>(d));
  sinusoidal_position_row(t, d, pos.data());
  for (int64_t i = 0; i < d; ++i) row[i] = e[i] * sqrt_d + pos[i];
  ++s_->consumed;
  s_->append_kv(0, row);
  return finalize_ready(/*at_end=*/false);
}

std::vector<int> StreamingDecoder::finish() {
  if (s_->done) throw Error("stream: finish called twice");
  std::vector<int> emitted = finalize_ready(/*at_end=*/true);
  s_->done = true;
  trace_.finished = true;
  trace_.source_length = s_->consumed;
  trace_.target_length = static_cast<int64_t>(output_.size());
  return emitted;
}

std::pair<std::vector<int>, StreamTrace> stream_translate(
    const Model& model, std::span<const int> source_ids, const Clock& clock) {
  StreamingDecoder dec(model, clock);
  for (int id : source_ids) dec.push(id);
  dec.finish();
  return {dec.output(), dec.trace()};
}

std::pair<std::vector<int>, StreamTrace> stream_translate(
    const Model& model, std::span<const int> source_ids) {
  MonotonicClock clock;
  return stream_translate(model, source_ids, clock);
}

std::pair<std::vector<int>, StreamTrace> stream_translate_identity_clock(
    const Model& model, std::span<const int> source_ids) {
  ManualClock clock;
  StreamingDecoder dec(model, clock);
  for (size_t i = 0; i < source_ids.size(); ++i) {
    clock.set(static_cast<double>(i + 1));
    dec.push(source_ids[i]);
  }
  clock.set(static_cast<double>(source_ids.size()));
  dec.finish();
  return {dec.output(), dec.trace()};
}

std::vector<int> decode_offline(const Model& model,
                                std::span<const int> source_ids) {
  if (source_ids.empty()) return {};
  Tensor h = model.encode(source_ids);
  Tensor logits = model.length_project(h);
  const int64_t v = logits.dim(1);
  std::vector<int> frame_syms;
  frame_syms.reserve(static_cast<size_t>(logits.dim(0)));
  for (int64_t t = 0; t < logits.dim(0); ++t) {
    frame_syms.push_back(argmax_row(logits.values().data() + t * v, v));
  }
  return ctc::collapse(frame_syms);
}

std::vector<int64_t> wait_k_schedule(int64_t k, int64_t source_length,
                                     int64_t target_length) {
  if (k < 1) throw Error("wait_k_schedule: k must be >= 1");
  std::vector<int64_t> g(static_cast<size_t>(target_length));
  for (int64_t t = 1; t <= target_length; ++t) {
    g[t - 1] = std::min(t + k - 1, source_length);
  }
  return g;
}

std::vector<int> decode_with_oracle(const Model& model,
                                    const SortingNetwork& asn,
                                    std::span<const int> source_ids,
                                    std::span<const int> reference_ids) {
  if (source_ids.empty()) return {};
  Tensor h = model.encode(source_ids);
  RngStream unused_mask(0);
  Tensor q = asn.compute_q(h, reference_ids, /*gamma=*/0.0, unused_mask);
  Tensor scores = sinkhorn_attention(q, h);
  AsnOperator op{asn.config(), AsnVariant::kDefault};
  op.config.noise_factor = 0.0;
  RngStream unused_noise(0);
  Tensor z = gumbel_sinkhorn(scores, op, unused_noise).z;
  Tensor reordered = apply_permutation(z, h);
  Tensor logits = model.length_project(reordered);
  const int64_t v = logits.dim(1);
  std::vector<int> frame_syms;
  for (int64_t t = 0; t < logits.dim(0); ++t) {
    frame_syms.push_back(argmax_row(logits.values().data() + t * v, v));
  }
  return ctc::collapse(frame_syms);
}

}  // namespace simt
