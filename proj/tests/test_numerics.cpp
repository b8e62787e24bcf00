#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "declension/error.hpp"
#include "declension/numerics.hpp"

using namespace declension;

TEST_CASE("matvec") {
  const Tensor id = Tensor::from(2, 2, {1, 0, 0, 1});
  CHECK(matvec(id, Tensor::column({3, 4})) == Tensor::column({3, 4}));
  CHECK(matvec(Tensor(3, 2), Tensor::column({5, -7})) == Tensor::vector(3));
  CHECK(matvec(Tensor::from(2, 2, {1, 2, 3, 4}), Tensor::column({1, 1})) == Tensor::column({3, 7}));

  SUBCASE("shape mismatch names both shapes") {
    try {
      matvec(Tensor(2, 3), Tensor::vector(2));
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("2x3") != std::string::npos);
      CHECK(msg.find("2x1") != std::string::npos);
    }
  }
}

TEST_CASE("matvec distributes over vector addition") {
  Prng prng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + prng.below(5);
    const std::size_t cols = 1 + prng.below(5);
    const Tensor m = init_uniform(prng, rows, cols, 1);
    const Tensor a = init_uniform(prng, cols, 1, 1);
    const Tensor b = init_uniform(prng, cols, 1, 1);
    Tensor sum = a;
    for (std::size_t i = 0; i < cols; ++i) sum[i] += b[i];
    const Tensor lhs = matvec(m, sum);
    const Tensor ma = matvec(m, a);
    const Tensor mb = matvec(m, b);
    for (std::size_t i = 0; i < rows; ++i) CHECK(std::abs(lhs[i] - (ma[i] + mb[i])) <= 1e-12);
  }
}

TEST_CASE("softmax") {
  const Tensor u = softmax(Tensor::column({0, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Tensor big = softmax(Tensor::column({1000, 0}));
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] >= 0.0);
  CHECK(big[1] < 1e-300);

  const Tensor logs = softmax(Tensor::column({std::log(1.0), std::log(2.0), std::log(3.0)}));
  CHECK(std::abs(logs[0] - 1.0 / 6.0) < 1e-15);
  CHECK(std::abs(logs[1] - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(logs[2] - 1.0 / 2.0) < 1e-15);

  CHECK_THROWS_AS(softmax(Tensor()), Error);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Prng prng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + prng.below(12);
    Tensor logits(n, 1);
    for (double& x : logits.values()) x = prng.uniform(-30, 30);
    const Tensor p = softmax(logits);
    double total = 0.0;
    for (double x : p.values()) {
      CHECK(x > 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const double shift = prng.uniform(-100, 100);
    Tensor shifted = logits;
    for (double& x : shifted.values()) x += shift;
    const Tensor q = softmax(shifted);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("cross_entropy") {
  for (std::size_t v : {2u, 5u, 37u}) {
    const Tensor uniform(v, 1, 1.0 / static_cast<double>(v));
    CHECK(std::abs(cross_entropy(uniform, v - 1) - std::log(static_cast<double>(v))) <= 1e-12);
  }
  CHECK(cross_entropy(Tensor::column({0, 1, 0}), 1) == 0.0);
  // -ln(1e-12) = 12 ln 10
  CHECK(cross_entropy(Tensor::column({1, 0}), 1) == doctest::Approx(27.631021115928547).epsilon(1e-14));
  CHECK_THROWS_AS(cross_entropy(Tensor::column({1, 0}), 2), Error);
}

TEST_CASE("cross_entropy is non-negative and zero only at certainty") {
  Prng prng(17);
  for (int trial = 0; trial < 300; ++trial) {
    Tensor logits(6, 1);
    for (double& x : logits.values()) x = prng.uniform(-5, 5);
    const Tensor p = softmax(logits);
    const double ce = cross_entropy(p, prng.below(6));
    CHECK(ce > 0.0);
  }
}

TEST_CASE("SplitMix64 matches the published reference stream for seed 0") {
  Prng prng(0);
  CHECK(prng.next_u64() == 0xE220A8397B1DCDAFULL);
  CHECK(prng.next_u64() == 0x6E789E6AA1B965F4ULL);
  CHECK(prng.next_u64() == 0x06C45D188009454FULL);
  CHECK(prng.next_u64() == 0xF88BB8A8724C81ECULL);
}

TEST_CASE("Prng helpers stay in range") {
  Prng prng(123);
  for (int i = 0; i < 10000; ++i) {
    const double d = prng.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(prng.below(7) < 7);
  }
}

TEST_CASE("init_uniform") {
  Prng a(77);
  Prng b(77);
  const Tensor x = init_uniform(a, 4, 9, 16);
  CHECK(x == init_uniform(b, 4, 9, 16));
  for (double v : x.values()) {
    CHECK(v >= -0.25);
    CHECK(v <= 0.25);
  }
  Prng c(3);
  const Tensor y = init_uniform(c, 10, 10, 1);
  for (double v : y.values()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(init_uniform(c, 1, 1, 0), Error);
}

TEST_CASE("finite_diff_grad") {
  const auto sum_sq = [](const Tensor& t) {
    double s = 0.0;
    for (double x : t.values()) s += x * x;
    return s;
  };
  const Tensor g = finite_diff_grad(sum_sq, Tensor::column({1, 2}));
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);

  const Tensor zero = finite_diff_grad([](const Tensor&) { return 3.5; }, Tensor::column({1, 2, 3}));
  for (double x : zero.values()) CHECK(x == 0.0);

  const Tensor slope = Tensor::column({0.5, -2.0, 3.0});
  const auto linear = [&](const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += slope[i] * t[i];
    return s;
  };
  const Tensor gl = finite_diff_grad(linear, Tensor::column({0.1, 0.2, 0.3}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(gl[i] - slope[i]) < 1e-9);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> a(50);
  for (int i = 0; i < 50; ++i) a[static_cast<std::size_t>(i)] = i;
  auto b = a;
  Prng p1(8);
  Prng p2(8);
  shuffle(a, p1);
  shuffle(b, p2);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
