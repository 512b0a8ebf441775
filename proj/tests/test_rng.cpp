#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "clotkit/rng.hpp"

using namespace clotkit;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical seeds replay the identical stream") {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds or streams give different prefixes") {
  CounterRng a(42, 0);
  CounterRng b(43, 0);
  CounterRng c(42, 1);
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    if (va == b.next_u64()) ++equal_ab;
    if (va == c.next_u64()) ++equal_ac;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("next_double lies in [0, 1) and fills the range") {
  CounterRng rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("next_below frequency matches a chi-square style bound") {
  // 10 buckets, 100k draws: expected 10k per bucket, sd ~ sqrt(10k*0.9) ~ 95.
  CounterRng rng(7, 3);
  std::array<int, 10> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.next_below(10)];
  double chi2 = 0.0;
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
    const double d = c - n / 10.0;
    chi2 += d * d / (n / 10.0);
  }
  // 9 degrees of freedom; 99.99th percentile is ~33.7.
  CHECK(chi2 < 35.0);
}

TEST_CASE("next_below(0) and next_below(1) never escape their range") {
  CounterRng rng(5);
  for (int i = 0; i < 100; ++i) CHECK(rng.next_below(1) == 0);
  CHECK(rng.next_below(0) == 0);
}

TEST_CASE("uniform(lo, hi) stays inside the interval and hits both halves") {
  CounterRng rng(11);
  int below = 0;
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.5, 4.5);
    CHECK(u >= -2.5);
    CHECK(u < 4.5);
    if (u < 1.0) ++below;
  }
  CHECK(below > 400);
  CHECK(below < 600);
}

TEST_CASE("normal() has approximately zero mean and unit variance") {
  CounterRng rng(123);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);        // sd of the mean ~ 1/sqrt(n) ~ 0.0045
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("normal consumes exactly two uniforms per call") {
  CounterRng rng(9);
  rng.normal();
  CHECK(rng.draws() == 2);
  rng.normal();
  CHECK(rng.draws() == 4);
}

TEST_CASE("fork is independent of the parent stream position") {
  CounterRng parent(77, 1);
  CounterRng forked_early = parent.fork(5);
  parent.next_u64();
  parent.next_u64();
  CounterRng forked_late = parent.fork(5);
  // Forking never observes the parent's counter.
  for (int i = 0; i < 32; ++i) CHECK(forked_early.next_u64() == forked_late.next_u64());
}

TEST_CASE("fork streams do not collide with the parent or each other") {
  CounterRng parent(3, 0);
  CounterRng f1 = parent.fork(1);
  CounterRng f2 = parent.fork(2);
  int collisions = 0;
  for (int i = 0; i < 64; ++i) {
    const auto a = f1.next_u64();
    const auto b = f2.next_u64();
    if (a == b) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("mix64 is deterministic and hash_str matches reference FNV-1a values") {
  CHECK(mix64(0) == mix64(0));
  CHECK(mix64(1) != mix64(2));
  // FNV-1a 64-bit published test vectors.
  CHECK(hash_str("") == 0xcbf29ce484222325ULL);
  CHECK(hash_str("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_str("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("draws counts every output") {
  CounterRng rng(0);
  CHECK(rng.draws() == 0);
  rng.next_u64();
  rng.next_double();
  rng.next_below(10);
  CHECK(rng.draws() == 3);
}

TEST_SUITE_END();
