#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "smallball/errors.hpp"
#include "smallball/testfuncs.hpp"

using namespace smallball;

namespace {

std::vector<FunctionSpec> builtins() {
  return {parse_function("poly:0,0,1"), parse_function("poly:1,-2,0,1"), parse_function("trig:1,1,0,1"),
          parse_function("trig:2,3,1,3"), parse_function("x3sininv"),    parse_function("sincluster"),
          parse_function("abspow:1.5"),   parse_function("const:2")};
}

}  // namespace

TEST_CASE("values and derivatives") {
  const auto p = parse_function("poly:1,0,2");
  CHECK(p.value(3.0) == 19.0);
  CHECK(p.derivative(3.0) == 12.0);
  CHECK(p.derivative(3.0, 2) == 4.0);
  const auto x3 = FunctionSpec::x3_sin_inv();
  CHECK(x3.value(0.0) == 0.0);
  CHECK(x3.value(0.5) == doctest::Approx(0.125 * std::sin(2.0)));
  CHECK(FunctionSpec::periodic_sin_cluster().value(0.0) == 0.0);
  CHECK(std::abs(FunctionSpec::periodic_sin_cluster().value(std::numbers::pi)) < 1e-40);
  const auto t = parse_function("trig:1,2,3,4");
  const double h = 1e-6, x = 0.7;
  CHECK(t.derivative(x) == doctest::Approx((t.value(x + h) - t.value(x - h)) / (2 * h)).epsilon(1e-7));
  CHECK(parse_function("exp:1,1").value(1.0) == doctest::Approx(std::numbers::e));
  CHECK(parse_function("rational:1,0,0,1|1,0,1").value(1.0) == doctest::Approx(1.0));
}

TEST_CASE("describe round-trips through the parser") {
  for (const auto& f : builtins()) CHECK(parse_function(f.describe()).describe() == f.describe());
}

TEST_CASE("parser rejects bad input") {
  CHECK_THROWS(parse_function("nope"));
  CHECK_THROWS(parse_function("poly:"));
  CHECK_THROWS(parse_function("abspow:0.5"));
  CHECK_THROWS(parse_function("rational:1|1,0,-1"));  // real pole at ±1
}

TEST_CASE("K(eta) for f = x") {
  const auto f = parse_function("poly:0,1");
  const auto k = lower_envelope_k(f, 0.1, {-1.0, 1.0});
  CHECK(k.value == doctest::Approx(0.05).epsilon(0.01));
  const auto report = check_a1i(f, 2.0, 0.05, {-1.0, 1.0});
  CHECK(report.passes);
  for (std::size_t i = 0; i < report.eta_grid.size(); ++i)
    CHECK(report.k_of_eta[i] >= std::pow(report.eta_grid[i], 2.0));
}

TEST_CASE("constant function") {
  const auto f = FunctionSpec::constant(1.0);
  CHECK(lower_envelope_k(f, 0.3, {-5, 5}).value == 1.0);
  CHECK(check_a1i(f, 7.0, 1.0, {-5, 5}).passes);
  const auto l = check_lemma1_equivalences(FunctionSpec::constant(-3.0), 0.4, {-5, 5});
  CHECK(l.k_half == 3.0);
  CHECK(l.k2 == 3.0);
  CHECK(l.holds);
}

TEST_CASE("exponential fails far to the left") {
  const auto f = parse_function("exp:1,1");
  CHECK_FALSE(check_a1i(f, 2.0, 0.5, {-20.0, 0.0}).passes);
  CHECK_FALSE(check_ineq5(f, 2, 1.0, 0.1, {-20.0, 0.0}).holds);
}

TEST_CASE("declared constants pass") {
  for (const auto& f : builtins()) {
    CAPTURE(f.describe());
    REQUIRE(f.a1.has_value());
    CHECK(check_a1i(f, f.a1->k, f.a1->eta_star, default_range(f)).passes);
  }
}

TEST_CASE("lemma 1 relation") {
  const auto l = check_lemma1_equivalences(parse_function("poly:0,1"), 0.2, {-1, 1});
  CHECK(l.k2 == doctest::Approx(0.1).epsilon(0.02));
  CHECK(l.k_half == doctest::Approx(0.05).epsilon(0.02));
  CHECK(l.holds);
  CHECK(check_lemma1_equivalences(FunctionSpec::x3_sin_inv(), 0.05, default_range(FunctionSpec::x3_sin_inv())).holds);
  for (const auto& f : builtins())
    for (double eta : {0.02, 0.1, 0.3}) CHECK(check_lemma1_equivalences(f, eta, default_range(f)).holds);
}

TEST_CASE("K is non-decreasing in eta") {
  for (const auto& f : builtins()) {
    double prev = 0.0;
    for (double eta : {0.01, 0.02, 0.05, 0.1, 0.2}) {
      const double k = lower_envelope_k(f, eta, default_range(f)).value;
      CHECK(k >= prev * (1 - 1e-9));
      prev = k;
    }
  }
}

TEST_CASE("constant absorption for f = x") {
  // K(η) >= C η^K with C = 1/2, K = 1, so K(η) >= η^2 for η <= 1/2.
  const auto f = parse_function("poly:0,1");
  for (double eta : {0.01, 0.05, 0.1, 0.25, 0.5}) {
    const double k = lower_envelope_k(f, eta, {-2, 2}).value;
    CHECK(k >= 0.5 * eta * (1 - 1e-3));
    CHECK(k >= eta * eta);
  }
}

TEST_CASE("sufficient derivative condition") {
  const auto sq = parse_function("poly:1,0,1");
  const auto r = check_ineq5(sq, 2, 1.0, 1.0, {-10, 10});
  CHECK(r.holds);
  REQUIRE(r.constructive.has_value());
  CHECK(r.constructive->passes);
  const auto s = parse_function("trig:1,1,0,1");
  CHECK(check_ineq5(s, 1, 1.0, 0.25, default_range(s)).holds);
  const auto tight = check_ineq5(s, 1, 1.0, 0.4, default_range(s));
  CHECK_FALSE(tight.holds);
  CHECK(tight.value == doctest::Approx(0.2818).epsilon(1e-3));
  CHECK_THROWS_AS(check_ineq5(FunctionSpec::x3_sin_inv(), 9, 1.0, 0.1, {-1, 1}), PreconditionError);
}

TEST_CASE("polynomial growth lower bound") {
  CHECK(check_a1iii(parse_function("poly:0,0,1"), 1, 2, 1, {-50, 50}));
  CHECK_FALSE(check_a1iii(parse_function("trig:1,1,0,1"), 0.01, 0.1, 1, {-50, 50}));
  CHECK(check_a1iii(FunctionSpec::abs_pow(1.5), 0.9, 1.5, 2, {-50, 50}));
}

TEST_CASE("derivative growth bound on [-1000, 1000]") {
  for (const auto& f : builtins()) {
    CAPTURE(f.describe());
    const auto c0 = f.growth_constant();
    REQUIRE(c0.has_value());
    CHECK(check_a1ii(f, *c0, {-1000, 1000}));
  }
}
