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

#ifndef SIMT_ASN_HPP_
#define SIMT_ASN_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simt/model.hpp"
#include "simt/rng.hpp"
#include "simt/tensor.hpp"

namespace simt {

struct AsnConfig {
  int64_t decoder_layers = 3;      // M
  int64_t sinkhorn_iters = 16;     // l
  double temperature = 0.25;       // tau
  double noise_factor = 0.3;       // delta
  double context_mask_ratio = 0.5; // gamma
  uint64_t seed = 2;

  void validate() const;
};

enum class AsnVariant {
  kDefault,
  kNoTemperature,  // tau = 1
  kNoNoise,        // delta = 0
  kGumbelSoftmax,  // row softmax instead of Sinkhorn
};

struct AsnOperator {
  AsnConfig config;
  AsnVariant variant = AsnVariant::kDefault;
};

// Wires the named ablation variant. Throws ConfigError on unknown names.
// Accepted: "default", "no_temperature", "no_noise", "gumbel_softmax".
AsnOperator ablation_switches(const AsnConfig& base, const std::string& name);
std::string variant_name(AsnVariant v);

// Doubly-stochastic relaxation of a permutation, with the sampling
// provenance it was drawn under.
struct PermutationSample {
  Tensor z;  // (N, N), rows sum to ~1, columns sum to ~1
  AsnConfig config;
  uint64_t noise_seed = 0;
};

// iters alternating row/column normalizations of exp(x), computed in log
// space (identical values, no overflow at low temperature). iters = 0
// returns exp(x) itself. Throws on non-finite input.
Tensor sinkhorn_normalize(const Tensor& x, int64_t iters);

// Z = S^l((A + delta * E) / tau), E ~ Gumbel(0,1) i.i.d., sampled once per
// call; differentiable w.r.t. scores (noise is constant). The
// kGumbelSoftmax variant replaces S^l with a row-wise softmax.
PermutationSample gumbel_sinkhorn(const Tensor& scores, const AsnOperator& op,
                                  RngStream& noise_rng,
                                  uint64_t noise_seed = 0);
inline PermutationSample gumbel_sinkhorn(const Tensor& scores,
                                         const AsnConfig& cfg,
                                         RngStream& noise_rng,
                                         uint64_t noise_seed = 0) {
  return gumbel_sinkhorn(scores, AsnOperator{cfg, AsnVariant::kDefault},
                         noise_rng, noise_seed);
}

// A = Q H^T / sqrt(d_h); no normalization here.
Tensor sinkhorn_attention(const Tensor& q, const Tensor& h);

// H_bar = Z H. An exact permutation matrix reorders rows bitwise.
Tensor apply_permutation(const Tensor& z, const Tensor& h);

// Greedy hard assignment for analysis plots: visits entries in decreasing
// score order, claiming free (row, column) pairs. Returns column per row.
std::vector<int64_t> hard_assignment(const Tensor& z);

// Training-only reordering network: M non-causal Transformer decoder layers
// over the encoder states, cross-attending to gamma-masked target
// embeddings, followed by Sinkhorn attention and the Gumbel-Sinkhorn
// operator. Never constructed on the streaming path.
class SortingNetwork {
 public:
  SortingNetwork(const ModelConfig& model_cfg, AsnConfig cfg,
                 std::shared_ptr<ParamStore> store);

  const AsnConfig& config() const { return cfg_; }
  void init_parameters(uint64_t seed);

  // Q of shape (|x|, d): self-attention over the encoder states with no
  // causal mask; cross-attention context is the target embedding sequence
  // where each position is independently replaced by the [M] embedding with
  // probability gamma. Throws on an empty target.
  Tensor compute_q(const Tensor& hidden, std::span<const int> target_ids,
                   double gamma, RngStream& mask_rng,
                   const FwdCtx& ctx = {}) const;

  // compute_q -> sinkhorn_attention -> gumbel_sinkhorn.
  PermutationSample sample_permutation(const Tensor& hidden,
                                       std::span<const int> target_ids,
                                       const AsnOperator& op,
                                       RngStream& mask_rng,
                                       RngStream& noise_rng,
                                       const FwdCtx& ctx = {},
                                       uint64_t noise_seed = 0) const;

 private:
  struct Layer {
    NormWeights ln1, ln2, ln3;
    AttentionWeights self_attn, cross_attn;
    FfnWeights ffn;
  };

  ModelConfig model_cfg_;
  AsnConfig cfg_;
  std::shared_ptr<ParamStore> store_;
  Tensor tgt_embed_;  // (vocab + 1, d); the extra row is the [M] embedding
  std::vector<Layer> layers_;
  NormWeights ln_out_;
};

}  // namespace simt

#endif  // SIMT_ASN_HPP_
