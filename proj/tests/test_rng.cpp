#include <doctest.h>

#include <cmath>
#include <vector>

#include "edgesim/rng.hpp"

using namespace edgesim;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: uniform lies in [0, 1) and has the right mean") {
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rng: below is unbiased over a small range") {
  Rng r(11);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  const double p = 1.0 / 7.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) < 4 * sigma);
}

TEST_CASE("rng: normal has zero mean and unit variance") {
  Rng r(5);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rng: serialize round-trips the engine state") {
  Rng a(99);
  for (int i = 0; i < 17; ++i) a.next_u64();
  Rng b(0);
  b.deserialize(a.serialize());
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: derived seeds differ by stream and master") {
  CHECK(derive_seed(1, "env") != derive_seed(1, "exploration"));
  CHECK(derive_seed(1, "env") != derive_seed(2, "env"));
  CHECK(derive_seed(1, "env") == derive_seed(1, "env"));
}
