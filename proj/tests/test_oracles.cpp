#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "smallball/errors.hpp"
#include "smallball/oracles.hpp"

using namespace smallball;
using namespace smallball::oracles;

TEST_CASE("gamma function") {
  CHECK(gamma_function(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_function(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));
  CHECK(gamma_function(1.2) == doctest::Approx(0.9181687424).epsilon(1e-10));
  for (double z : {0.05, 0.3, 0.8, 1.7, 3.3, 7.5, 20.0})
    CHECK(gamma_function(z) == doctest::Approx(std::tgamma(z)).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_function(0.0), PreconditionError);
}

TEST_CASE("gamma by quadrature agrees with the series form") {
  for (double a : {0.1, 0.2, 0.5, 0.8, 1.5}) CHECK(gamma_quadrature(a).value == doctest::Approx(gamma_function(a)).epsilon(1e-10));
}

TEST_CASE("lemma a1 examples") {
  CHECK(lemma_a1_integral(0.75, 1.0, 0.0).closed_form == doctest::Approx(2.0));
  CHECK(lemma_a1_integral(0.75, 0.0, 0.3).closed_form == 0.0);
  const auto r = lemma_a1_integral(0.75, 1.0, 1.0);
  CHECK(r.closed_form == doctest::Approx(2.0));
  CHECK(r.quadrature.value == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.within_bound);
  CHECK_THROWS_AS(lemma_a1_integral(0.5, 1, 1), PreconditionError);
}

TEST_CASE("lemma a1 closed form matches quadrature on random triples") {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> hurst(0.55, 0.95), pos(0.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    const double h = hurst(gen), x = pos(gen), y = pos(gen);
    const auto r = lemma_a1_integral(h, x, y);
    CAPTURE(h);
    CAPTURE(x);
    CAPTURE(y);
    CHECK(std::abs(r.closed_form - r.quadrature.value) <= 1e-8 + 10 * r.quadrature.abs_error_estimate);
    CHECK(r.within_bound);
  }
}

TEST_CASE("I0 identity") {
  for (double h : {0.55, 0.6, 0.75, 0.9}) {
    const auto r = lemma_a2_i5(h, 0.0);
    CHECK(std::abs(r.value - gamma_function(2 * h - 1)) < 1e-6);
  }
}

TEST_CASE("lemma a2 continuity and boundedness") {
  CHECK(lemma_a2_i5(0.75, 1e-6).value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-3));
  // I(p) decays like p^{2H-2}
  CHECK(lemma_a2_i5(0.75, 1e3).value == doctest::Approx(std::pow(1e3, -0.5)).epsilon(0.01));
  const double at_zero = lemma_a2_i5(0.6, 0.0).value;
  double largest = 0.0;
  for (double p = 1e-3; p <= 1e3; p *= 10) largest = std::max(largest, lemma_a2_i5(0.6, p).value);
  CHECK(largest < 2 * at_zero);
}

TEST_CASE("lemma a3 limit") {
  CHECK(lemma_a3_limit(0.75).limit == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-3));
  CHECK(lemma_a3_limit(0.9).limit == doctest::Approx(1.164230).epsilon(1e-3));
  CHECK(std::abs(lemma_a3_limit(0.6).limit - gamma_function(0.2)) < 1e-3);
}

TEST_CASE("lemma a3 quadrature matches its power series") {
  for (double h : {0.6, 0.75, 0.9})
    for (double x : {1e-2, 1e-1, 1.0}) CHECK(lemma_a3_ratio(h, x).value == doctest::Approx(lemma_a3_series(h, x)).epsilon(1e-9));
}

TEST_CASE("error estimates cover one refinement level") {
  // Halving the starting point adds one level to the extrapolation.
  for (double h : {0.6, 0.75}) {
    const auto coarse = lemma_a3_limit(h, 0.1, 4);
    const auto fine = lemma_a3_limit(h, 0.1, 5);
    CHECK(std::abs(fine.limit - coarse.limit) <= coarse.error_estimate + 1e-12);
  }
  for (double h : {0.6, 0.9}) {
    const auto r = lemma_a1_integral(h, 2.0, 0.7);
    CHECK(std::abs(r.quadrature.value - r.closed_form) <= r.quadrature.abs_error_estimate + 1e-13);
  }
}
