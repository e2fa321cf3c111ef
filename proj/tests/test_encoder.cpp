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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "simt/ctc.hpp"
#include "simt/model.hpp"
#include "simt/ops.hpp"

using namespace simt;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.vocab_size = 8;
  cfg.embed_dim = 16;
  cfg.ffn_dim = 32;
  cfg.heads = 2;
  cfg.layers = 2;
  cfg.dropout = 0.0;
  cfg.delay_k = 1;
  cfg.upsample = 2;
  cfg.seed = 11;
  return cfg;
}

bool allowed_at(const std::vector<uint8_t>& mask, int64_t n, int64_t t,
                int64_t j) {
  return mask[t * n + j] != 0;
}

}  // namespace

TEST_CASE("delay mask with k=1 is lower triangular") {
  auto m = delay_mask(3, 1);
  for (int64_t t = 0; t < 3; ++t) {
    for (int64_t j = 0; j < 3; ++j) {
      CHECK(allowed_at(m, 3, t, j) == (j <= t));
    }
  }
}

TEST_CASE("delay mask row 1 with k=3 sees the first three tokens") {
  auto m = delay_mask(5, 3);
  // 1-based row 1 = 0-based row 0
  CHECK(allowed_at(m, 5, 0, 0));
  CHECK(allowed_at(m, 5, 0, 1));
  CHECK(allowed_at(m, 5, 0, 2));
  CHECK_FALSE(allowed_at(m, 5, 0, 3));
  CHECK_FALSE(allowed_at(m, 5, 0, 4));
}

TEST_CASE("delay mask clips at the sentence end") {
  auto m = delay_mask(2, 9);
  for (int64_t t = 0; t < 2; ++t) {
    for (int64_t j = 0; j < 2; ++j) CHECK(allowed_at(m, 2, t, j));
  }
}

TEST_CASE("single-token input yields a single hidden state") {
  Model model = Model::fresh(small_config());
  std::vector<int> src = {3};
  Tensor h = model.encode(src);
  CHECK(h.shape() == Shape{1, 16});
}

TEST_CASE("out-of-vocabulary id is rejected") {
  Model model = Model::fresh(small_config());
  std::vector<int> src = {3, 99};
  CHECK_THROWS_AS(model.encode(src), Error);
}

TEST_CASE("perturbing unseen source positions leaves hidden states unchanged") {
  for (int64_t k : {1, 2, 3}) {
    ModelConfig cfg = small_config();
    cfg.delay_k = k;
    Model model = Model::fresh(cfg);
    std::vector<int> src = {2, 3, 4, 5, 6, 7};
    Tensor h = model.encode(src);
    // perturb position p (0-based); rows t with t + k - 1 < p stay identical
    for (size_t p = 1; p < src.size(); ++p) {
      std::vector<int> perturbed = src;
      perturbed[p] = perturbed[p] == 2 ? 3 : 2;
      Tensor hp = model.encode(perturbed);
      for (int64_t t = 0; t < static_cast<int64_t>(src.size()); ++t) {
        if (t + k - 1 < static_cast<int64_t>(p)) {
          for (int64_t i = 0; i < 16; ++i) {
            CHECK(h.values()[t * 16 + i] == hp.values()[t * 16 + i]);
          }
        }
      }
    }
  }
}

TEST_CASE("streaming causality: prefix encodes equal full encodes exactly") {
  for (int64_t k : {1, 2, 4}) {
    ModelConfig cfg = small_config();
    cfg.delay_k = k;
    Model model = Model::fresh(cfg);
    std::vector<int> src = {5, 2, 7, 3, 6, 4, 2};
    Tensor full = model.encode(src);
    for (size_t plen = 1; plen <= src.size(); ++plen) {
      std::vector<int> prefix(src.begin(), src.begin() + plen);
      Tensor hp = model.encode(prefix);
      for (int64_t t = 0; t < static_cast<int64_t>(plen); ++t) {
        if (t + k - 1 < static_cast<int64_t>(plen)) {
          // finalized inside the prefix: must match the full encode bitwise
          for (int64_t i = 0; i < 16; ++i) {
            CHECK(full.values()[t * 16 + i] == hp.values()[t * 16 + i]);
          }
        }
      }
    }
  }
}

TEST_CASE("k=1 vs k=2 differ only where the extra lookahead is visible") {
  ModelConfig cfg = small_config();
  Model model = Model::fresh(cfg);
  std::vector<int> src = {2, 3, 4, 5, 6};
  const int64_t n = static_cast<int64_t>(src.size());
  model.set_delay(1);
  Tensor h1 = model.encode(src);
  model.set_delay(2);
  Tensor h2 = model.encode(src);
  // The final row sees the whole sentence either way only when t+1 > |x|;
  // rows with t+1 <= |x| (0-based t+1 <= n-1) may differ, the last row
  // differs only through its inputs... for the last row t = n-1 the k=2
  // window clips to the sentence end, but earlier rows changed, so only
  // assert where nothing extra is visible anywhere in the stack: t = n-1
  // with one layer of lookahead still depends on rows t' <= t which saw
  // more. A sufficient exact claim: some row differs, and row 0 differs
  // because it sees token 1 with k=2.
  bool row0_differs = false;
  for (int64_t i = 0; i < 16; ++i) {
    if (h1.values()[i] != h2.values()[i]) row0_differs = true;
  }
  CHECK(row0_differs);
  (void)n;
}

TEST_CASE("length projection shapes and position-wise behavior") {
  ModelConfig cfg = small_config();
  Model model = Model::fresh(cfg);

  Tensor one = Tensor::from({1, 16}, std::vector<double>(16, 0.5));
  CHECK(model.length_project(one).shape() == Shape{2, 8});

  // permuting input rows permutes output frame blocks identically
  std::vector<double> rows(3 * 16);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = 0.01 * (double)i - 0.2;
  Tensor h = Tensor::from({3, 16}, rows);
  std::vector<double> swapped = rows;
  for (int64_t i = 0; i < 16; ++i) std::swap(swapped[i], swapped[32 + i]);
  Tensor hs = Tensor::from({3, 16}, swapped);
  Tensor f = model.length_project(h);
  Tensor fs = model.length_project(hs);
  const int64_t v = 8;
  for (int64_t frame = 0; frame < 6; ++frame) {
    int64_t pos = frame / 2, within = frame % 2;
    int64_t spos = pos == 0 ? 2 : (pos == 2 ? 0 : 1);
    for (int64_t c = 0; c < v; ++c) {
      CHECK(f.values()[frame * v + c] ==
            fs.values()[(spos * 2 + within) * v + c]);
    }
  }
}

TEST_CASE("zero projection weights broadcast the bias") {
  ModelConfig cfg = small_config();
  Model model = Model::fresh(cfg);
  Tensor w = model.store()->get("proj.w");
  Tensor b = model.store()->get("proj.b");
  for (auto& x : w.values_mut()) x = 0.0;
  for (int64_t i = 0; i < b.numel(); ++i) b.values_mut()[i] = 0.1 * (double)i;
  Tensor h = Tensor::from({2, 16}, std::vector<double>(32, 0.7));
  Tensor f = model.length_project(h);
  for (int64_t frame = 0; frame < 4; ++frame) {
    for (int64_t c = 0; c < 8; ++c) {
      CHECK(f.values()[frame * 8 + c] ==
            doctest::Approx(b.values()[(frame % 2) * 8 + c]));
    }
  }
}

TEST_CASE("every parameter receives gradient on a training batch") {
  ModelConfig cfg = small_config();
  cfg.dropout = 0.1;
  Model model = Model::fresh(cfg);
  std::vector<int> src = {2, 3, 4, 5};
  std::vector<int> tgt = {3, 4, 5, 2};
  RngStream drop = derive_stream(1, {9});
  FwdCtx ctx{true, &drop};
  Tape tape;
  Tensor h = model.encode(src, ctx);
  Tensor logits = model.length_project(h);
  Tensor loss = ctc::ctc_loss(logits, tgt, 0.1);
  tape.backward(loss);
  for (const std::string& name : model.store()->names()) {
    Tensor p = model.store()->get(name);
    REQUIRE(p.has_grad());
    double norm = 0.0;
    for (double g : p.grad()) norm += g * g;
    INFO(name);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("encoder+projection+ctc path passes a finite-difference check") {
  ModelConfig cfg = small_config();
  cfg.embed_dim = 8;
  cfg.ffn_dim = 12;
  cfg.layers = 1;
  cfg.heads = 2;
  Model model = Model::fresh(cfg);
  std::vector<int> src = {2, 3, 4, 5};
  std::vector<int> tgt = {4, 2, 6};
  auto forward = [&]() {
    Tensor h = model.encode(src);
    Tensor logits = model.length_project(h);
    return ctc::ctc_loss(logits, tgt);
  };
  for (const char* name : {"enc.embed", "enc.l0.attn.wq", "proj.w"}) {
    INFO(name);
    CHECK(grad_check_param(forward, model.store()->get(name)) <= 1e-4);
  }
}
