#include <cmath>
#include <numbers>

#include "doctest.h"
#include "smallball/quadrature.hpp"

using namespace smallball;

TEST_CASE("polynomials integrate exactly") {
  const auto r = integrate([](double x) { return 3 * x * x + 2 * x + 1; }, 0.0, 2.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(14.0).epsilon(1e-14));
}

TEST_CASE("reversed limits flip the sign") {
  const auto r = integrate([](double x) { return std::cos(x); }, 1.0, 0.0);
  CHECK(r.value == doctest::Approx(-std::sin(1.0)).epsilon(1e-13));
}

TEST_CASE("endpoint power singularities") {
  // ∫_0^1 x^{-1/2} cos x dx
  const auto left = integrate_left_power([](double x) { return std::cos(x); }, 0.0, 1.0, 0.5);
  const auto naive = integrate([](double x) { return std::cos(x * x) * 2.0; }, 0.0, 1.0);
  CHECK(left.value == doctest::Approx(naive.value).epsilon(1e-12));
  const auto right = integrate_right_power([](double) { return 1.0; }, 0.0, 2.0, 0.3);
  CHECK(right.value == doctest::Approx(std::pow(2.0, 0.3) / 0.3).epsilon(1e-12));
}

TEST_CASE("semi-infinite range") {
  const auto r = integrate_to_infinity([](double z) { return std::exp(-z) * z * z; }, 0.0);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-11));
  const auto g = integrate_to_infinity([](double z) { return std::exp(-z * z); }, 0.0);
  CHECK(g.value == doctest::Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-10));
}

TEST_CASE("error estimate covers one further refinement") {
  auto f = [](double x) { return std::sqrt(x) * std::sin(5 * x); };
  QuadratureOptions coarse;
  coarse.rel_tol = 1e-6;
  coarse.abs_tol = 1e-8;
  const auto a = integrate(f, 0.0, 3.0, coarse);
  QuadratureOptions fine;
  fine.rel_tol = 1e-13;
  const auto b = integrate(f, 0.0, 3.0, fine);
  CHECK(std::abs(a.value - b.value) <= a.abs_error_estimate);
}

TEST_CASE("exhausted budget is reported") {
  QuadratureOptions tight;
  tight.max_subdivisions = 3;
  tight.rel_tol = 1e-15;
  tight.abs_tol = 0.0;
  const auto r = integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, tight);
  CHECK_FALSE(r.converged);
}
