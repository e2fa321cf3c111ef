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

#include <cmath>
#include <vector>

#include "simt/ops.hpp"
#include "simt/rng.hpp"
#include "simt/tensor.hpp"

using namespace simt;

namespace {

Tensor random_tensor(Shape shape, RngStream& rng, bool requires_grad = false,
                     double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul identity") {
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor c = ops::matmul(a, id);
  for (int i = 0; i < 4; ++i) CHECK(c.values()[i] == a.values()[i]);
}

TEST_CASE("matmul shape error names op and shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("(2,3)") != std::string::npos);
  }
}

TEST_CASE("softmax of equal scores is uniform") {
  Tensor x = Tensor::from({2}, {0, 0});
  Tensor y = ops::softmax(x);
  CHECK(y.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.values()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("layer_norm of a constant row is zero before affine") {
  Tensor x = Tensor::from({1, 4}, {3, 3, 3, 3});
  Tensor gain = Tensor::full({4}, 1.0);
  Tensor bias = Tensor::zeros({4});
  Tensor y = ops::layer_norm(x, gain, bias);
  for (int i = 0; i < 4; ++i) {
    CHECK(y.values()[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::from({3}, {1, 2, 3}, /*requires_grad=*/true);
  Tape tape;
  Tensor loss = ops::sum_all(ops::multiply(x, x));
  tape.backward(loss);
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
  CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("backward of log_softmax pick equals softmax minus one-hot") {
  Tensor x = Tensor::from({1, 3}, {0.3, -0.7, 1.1}, true);
  Tape tape;
  Tensor lp = ops::log_softmax(x);
  // pick index 1 via a mask-weighted sum
  Tensor pick = Tensor::from({1, 3}, {0, 1, 0});
  Tensor loss = ops::scale(ops::sum_all(ops::multiply(lp, pick)), -1.0);
  tape.backward(loss);
  Tensor sm = ops::softmax(Tensor::from({1, 3}, {0.3, -0.7, 1.1}));
  for (int i = 0; i < 3; ++i) {
    const double expect = sm.values()[i] - (i == 1 ? 1.0 : 0.0);
    CHECK(x.grad()[i] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("non-scalar loss is rejected") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  Tensor y = ops::multiply(x, x);
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("gradient accumulates additively across uses") {
  Tensor x = Tensor::from({2}, {0.5, -1.5}, true);
  Tape tape;
  // f(x) + g(x) with f = sum(x*x), g = sum(3*x)
  Tensor loss =
      ops::add(ops::sum_all(ops::multiply(x, x)), ops::sum_all(ops::scale(x, 3.0)));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2 * 0.5 + 3.0));
  CHECK(x.grad()[1] == doctest::Approx(2 * -1.5 + 3.0));

  // equals the sum of the separate gradients exactly
  Tensor x1 = Tensor::from({2}, {0.5, -1.5}, true);
  {
    Tape t1;
    t1.backward(ops::sum_all(ops::multiply(x1, x1)));
  }
  {
    Tape t2;
    t2.backward(ops::sum_all(ops::scale(x1, 3.0)));
  }
  CHECK(x.grad()[0] == x1.grad()[0]);
  CHECK(x.grad()[1] == x1.grad()[1]);
}

TEST_CASE("backward is deterministic bit for bit") {
  RngStream rng(7);
  Tensor x0 = random_tensor({4, 4}, rng);
  auto run = [&]() {
    Tensor x = Tensor::from({4, 4}, std::vector<double>(x0.values().begin(),
                                                        x0.values().end()),
                            true);
    Tape tape;
    Tensor y = ops::matmul(x, ops::transpose(x));
    Tensor loss = ops::sum_all(ops::softmax(y));
    tape.backward(loss);
    return std::vector<double>(x.grad().begin(), x.grad().end());
  };
  auto g1 = run();
  auto g2 = run();
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("grad_check on sum is exact") {
  RngStream rng(3);
  Tensor x = random_tensor({5}, rng);
  double err = grad_check([](const Tensor& t) { return ops::sum_all(t); }, x);
  CHECK(err < 1e-10);
}

TEST_CASE("random three-op graphs match finite differences") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed + 100);
    Tensor x = random_tensor({3, 4}, rng, false, 0.2, 1.5);
    auto f = [](const Tensor& t) {
      Tensor a = ops::log(t);
      Tensor b = ops::softmax(a);
      return ops::mean_all(ops::multiply(a, b));
    };
    CHECK(grad_check(f, x) < 1e-4);
  }
}

TEST_CASE("every primitive matches finite differences over random seeds") {
  // One hundred seeds spread across the primitive set.
  int failures = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed * 31 + 1);
    const int which = static_cast<int>(seed % 14);
    double err = 0.0;
    switch (which) {
      case 0: {
        Tensor x = random_tensor({3, 4}, rng);
        Tensor w = random_tensor({4, 2}, rng);
        err = grad_check(
            [&](const Tensor& t) { return ops::sum_all(ops::matmul(t, w)); },
            x);
        // and w.r.t. the right operand, non-square and batched
        Tensor a3 = random_tensor({2, 3, 4}, rng);
        Tensor b3 = random_tensor({2, 4, 5}, rng);
        err = std::max(err, grad_check(
            [&](const Tensor& t) {
              Tensor y = ops::matmul(a3, t);
              return ops::sum_all(ops::multiply(y, y));
            },
            b3));
        break;
      }
      case 1: {
        Tensor x = random_tensor({2, 3, 4}, rng);
        err = grad_check(
            [](const Tensor& t) {
              return ops::sum_all(ops::exp(ops::transpose(t, 0, 2)));
            },
            x);
        break;
      }
      case 2: {
        Tensor x = random_tensor({6}, rng);
        Tensor b = random_tensor({6}, rng);
        err = grad_check(
            [&](const Tensor& t) {
              return ops::sum_all(ops::multiply(ops::add(t, b), t));
            },
            x);
        break;
      }
      case 3: {
        Tensor x = random_tensor({5}, rng, false, 0.5, 2.0);
        Tensor b = random_tensor({5}, rng, false, 0.5, 2.0);
        err = grad_check(
            [&](const Tensor& t) { return ops::sum_all(ops::divide(b, t)); },
            x);
        break;
      }
      case 4: {
        Tensor x = random_tensor({7}, rng, false, 0.3, 2.0);
        err = grad_check(
            [](const Tensor& t) { return ops::sum_all(ops::log(t)); }, x);
        break;
      }
      case 5: {
        Tensor x = random_tensor({2, 5}, rng);
        err = grad_check(
            [](const Tensor& t) { return ops::mean_all(ops::softmax(t)); }, x);
        break;
      }
      case 6: {
        Tensor x = random_tensor({2, 5}, rng);
        Tensor w = random_tensor({2, 5}, rng);
        err = grad_check(
            [&](const Tensor& t) {
              return ops::sum_all(ops::multiply(ops::log_softmax(t), w));
            },
            x);
        break;
      }
      case 7: {
        Tensor x = random_tensor({3, 6}, rng);
        Tensor gain = random_tensor({6}, rng, false, 0.5, 1.5);
        Tensor bias = random_tensor({6}, rng);
        err = grad_check(
            [&](const Tensor& t) {
              return ops::sum_all(
                  ops::multiply(ops::layer_norm(t, gain, bias), t));
            },
            x);
        break;
      }
      case 8: {
        Tensor x = random_tensor({4, 3}, rng);
        std::vector<int> ids = {2, 0, 2};
        err = grad_check(
            [&](const Tensor& t) {
              return ops::sum_all(ops::embedding_lookup(t, ids));
            },
            x);
        break;
      }
      case 9: {
        Tensor x = random_tensor({2, 4}, rng);
        std::vector<uint8_t> mask = {1, 0, 0, 1};
        err = grad_check(
            [&](const Tensor& t) {
              return ops::sum_all(
                  ops::softmax(ops::masked_fill(t, mask, -1e30)));
            },
            x);
        break;
      }
      case 10: {
        Tensor x = random_tensor({2, 3}, rng);
        Tensor other = random_tensor({2, 2}, rng);
        err = grad_check(
            [&](const Tensor& t) {
              std::vector<Tensor> parts = {t, other};
              return ops::sum_all(ops::multiply(
                  ops::concat(parts, 1), ops::concat(parts, 1)));
            },
            x);
        break;
      }
      case 11: {
        Tensor x = random_tensor({2, 6}, rng);
        err = grad_check(
            [](const Tensor& t) {
              Tensor r = ops::reshape(t, {3, 4});
              return ops::sum_all(ops::multiply(r, r));
            },
            x);
        break;
      }
      case 12: {
        Tensor x = random_tensor({3, 4}, rng);
        err = grad_check(
            [](const Tensor& t) {
              return ops::sum_all(ops::multiply(ops::mean(t, 0), ops::mean(t, 0)));
            },
            x);
        break;
      }
      default: {
        Tensor x = random_tensor({4, 4}, rng);
        err = grad_check(
            [](const Tensor& t) {
              return ops::sum_all(ops::relu(ops::sub(t, ops::scale(t, 0.3))));
            },
            x);
        break;
      }
    }
    if (err >= 1e-4) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("dropout replays from its stream and scales kept entries") {
  Tensor x = Tensor::full({1000}, 1.0);
  auto run = [&](uint64_t seed) {
    RngStream rng = derive_stream(seed, {1, 2});
    Tensor y = ops::dropout(x, 0.25, rng);
    return std::vector<double>(y.values().begin(), y.values().end());
  };
  auto a = run(5);
  auto b = run(5);
  CHECK(a == b);
  int kept = 0;
  for (double v : a) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    if (v != 0.0) ++kept;
  }
  CHECK(kept > 600);
  CHECK(kept < 900);
}

TEST_CASE("dropout gradient routes through kept entries only") {
  RngStream data_rng(11);
  Tensor x = random_tensor({4, 4}, data_rng, true);
  Tape tape;
  RngStream rng(3);
  Tensor y = ops::dropout(x, 0.5, rng);
  tape.backward(ops::sum_all(y));
  RngStream rng2(3);
  Tensor y2 = ops::dropout(x, 0.5, rng2);
  for (int i = 0; i < 16; ++i) {
    const double expect = y2.values()[i] == 0.0 ? 0.0 : 2.0;
    CHECK(x.grad()[i] == doctest::Approx(expect));
  }
}

TEST_CASE("ops outside a tape do not record") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tensor y = ops::multiply(x, x);
  CHECK_FALSE(y.requires_grad());
}
