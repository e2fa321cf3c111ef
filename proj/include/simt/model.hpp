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

#ifndef SIMT_MODEL_HPP_
#define SIMT_MODEL_HPP_

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simt/ops.hpp"
#include "simt/rng.hpp"
#include "simt/tensor.hpp"

namespace simt {

struct ModelConfig {
  int64_t vocab_size = 0;  // includes blank (index 0) and pad (index 1)
  int64_t embed_dim = 512;
  int64_t ffn_dim = 2048;
  int64_t heads = 8;
  int64_t layers = 6;
  double dropout = 0.1;
  int64_t delay_k = 1;   // lookahead of the first encoder layer
  int64_t upsample = 2;  // frames emitted per hidden state
  uint64_t seed = 1;

  void validate() const;
};

// Ordered registry of named parameter tensors. Iteration order is creation
// order, which the optimizer and checkpoint format rely on.
class ParamStore {
 public:
  // Returns the existing tensor after checking its shape, or registers a
  // fresh zero tensor with requires_grad set.
  Tensor ensure(const std::string& name, const Shape& shape);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return map_.count(name) > 0; }
  const std::vector<std::string>& names() const { return names_; }
  void zero_grads();
  int64_t total_values() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Tensor> map_;
};

// Per-call forward options. Training mode enables dropout, which draws from
// the supplied stream.
struct FwdCtx {
  bool train = false;
  RngStream* dropout_rng = nullptr;
};

// Attention mask of the first encoder layer: entry (t, j) is true (allowed)
// iff j <= min(t + k - 1, length), 1-based. k = 1 is the standard causal
// mask used by every later layer.
std::vector<uint8_t> delay_mask(int64_t length, int64_t k);

// Sinusoidal position table, rows 0..n-1.
Tensor sinusoidal_positions(int64_t n, int64_t d);
// One row of the same table; the incremental decoder builds rows on demand.
void sinusoidal_position_row(int64_t t, int64_t d, double* out);

struct AttentionWeights {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};
AttentionWeights ensure_attention(ParamStore& store, const std::string& prefix,
                                  int64_t d);

struct FfnWeights {
  Tensor w1, b1, w2, b2;
};
FfnWeights ensure_ffn(ParamStore& store, const std::string& prefix, int64_t d,
                      int64_t ffn_dim);

struct NormWeights {
  Tensor gain, bias;
};
NormWeights ensure_norm(ParamStore& store, const std::string& prefix,
                        int64_t d);

// Scaled dot-product multi-head attention. allowed is a (Nq, Nkv) mask or
// empty for unmasked attention.
Tensor multi_head_attention(const AttentionWeights& w, const Tensor& q_in,
                            const Tensor& kv_in, int64_t heads,
                            const std::vector<uint8_t>& allowed);

Tensor feed_forward(const FfnWeights& w, const Tensor& x);

// Causal Transformer encoder with a delay-k first layer, plus the
// position-wise length projection that turns hidden states into CTC frame
// logits. Pre-norm residual blocks; sinusoidal positions; the delay applies
// to layer 1 only so the total lookahead is exactly k - 1 source tokens.
class Model {
 public:
  Model(ModelConfig cfg, std::shared_ptr<ParamStore> store);
  static Model fresh(ModelConfig cfg);  // seeded initialization

  const ModelConfig& config() const { return cfg_; }
  // Evaluation-time override of the first-layer delay.
  void set_delay(int64_t k);

  const std::shared_ptr<ParamStore>& store() const { return store_; }

  // (|src|, d). Throws on out-of-vocabulary ids or empty input.
  Tensor encode(std::span<const int> source_ids, const FwdCtx& ctx = {}) const;

  // (N, d) -> (upsample * N, vocab); a single affine map per position, so
  // rows never mix across positions.
  Tensor length_project(const Tensor& states) const;

  // Initializes every parameter from streams derived from (seed, name), so
  // values do not depend on registration order.
  void init_parameters(uint64_t seed);

 private:
  struct Layer {
    NormWeights ln1, ln2;
    AttentionWeights attn;
    FfnWeights ffn;
  };

  ModelConfig cfg_;
  std::shared_ptr<ParamStore> store_;
  Tensor embed_;
  std::vector<Layer> layers_;
  NormWeights ln_out_;
  Tensor proj_w_, proj_b_;
};

// Initialization helpers shared with the sorting network.
void init_embedding_values(Tensor t, int64_t d, RngStream& rng);
void init_affine_values(Tensor w, int64_t fan_in, int64_t fan_out,
                        RngStream& rng);
RngStream param_stream(uint64_t seed, const std::string& name);

}  // namespace simt

#endif  // SIMT_MODEL_HPP_
