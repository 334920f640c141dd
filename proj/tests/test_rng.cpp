#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "span/rng.hpp"

using span::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(12345), d(12345);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("frozen draws pin the cross-platform contract") {
  // First xoshiro256++ outputs for seed 42; any change to seeding or the
  // core generator must show up here.
  Rng r(42);
  CHECK(r.next_u64() == 0xd0764d4f4476689fULL);
  CHECK(r.next_u64() == 0x519e4174576f3791ULL);
  CHECK(r.next_u64() == 0xfbe07cfb0c24ed8cULL);
  CHECK(r.next_u64() == 0xb37d9f600cd835b8ULL);
  Rng u(42);
  CHECK(u.uniform() == doctest::Approx(0.81430514512290986).epsilon(1e-15));
  CHECK(u.uniform() == doctest::Approx(0.31882104006166112).epsilon(1e-15));
}

TEST_CASE("uniform ranges") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("uniform_int covers inclusive bounds") {
  Rng r(9);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    const int v = r.uniform_int(2, 5);
    CHECK(v >= 2);
    CHECK(v <= 5);
    lo = lo || v == 2;
    hi = hi || v == 5;
  }
  CHECK(lo);
  CHECK(hi);
}

TEST_CASE("normal moments are sane") {
  Rng r(11);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("mix derives stable independent seeds") {
  CHECK(Rng::mix(1, 2) == Rng::mix(1, 2));
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 1));
  CHECK(Rng::mix(1, 2) != Rng::mix(1, 3));
}

TEST_CASE("bernoulli frequency") {
  Rng r(13);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += r.bernoulli(0.3) ? 1 : 0;
  CHECK(hits > 2700);
  CHECK(hits < 3300);
}
