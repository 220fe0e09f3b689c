#include <cmath>
#include <vector>

#include "doctest.h"
#include "smallball/rng.hpp"
#include "smallball/stats.hpp"

using namespace smallball;

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same key reproduces the stream") {
  ReplicateRng a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) {
    CHECK(a() == b());
    CHECK(a.normal() == b.normal());
  }
}

TEST_CASE("replicates and seeds give different streams") {
  ReplicateRng a(42, 0), b(42, 1), c(43, 0);
  int equal_ab = 0, equal_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto x = a(), y = b(), z = c();
    equal_ab += x == y;
    equal_ac += x == z;
  }
  CHECK(equal_ab == 0);
  CHECK(equal_ac == 0);
}

TEST_CASE("uniform stays in the open unit interval with mean 1/2") {
  ReplicateRng rng(1, 0);
  std::vector<double> u(200000);
  for (auto& x : u) {
    x = rng.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  const auto s = stats::summarize(u);
  CHECK(std::abs(s.mean - 0.5) < 4.0 * s.standard_error);
  CHECK(s.variance == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normal variates have unit variance and zero skew") {
  ReplicateRng rng(9, 2);
  std::vector<double> z(200000);
  for (auto& x : z) x = rng.normal();
  const auto s = stats::summarize(z);
  CHECK(std::abs(s.mean) < 4.0 * s.standard_error);
  CHECK(s.variance == doctest::Approx(1.0).epsilon(0.01));
  double third = 0.0, fourth = 0.0;
  for (double x : z) {
    third += x * x * x;
    fourth += x * x * x * x;
  }
  CHECK(std::abs(third / z.size()) < 0.03);
  CHECK(fourth / z.size() == doctest::Approx(3.0).epsilon(0.03));
}
