#include <cmath>
#include <vector>

#include "doctest.h"
#include "smallball/rng.hpp"
#include "smallball/stats.hpp"

using namespace smallball;

TEST_CASE("wilson interval stays inside [0,1] at p = 0") {
  const auto w = stats::wilson(0, 1000);
  CHECK(w.center - w.half_width >= -1e-15);
  CHECK(w.center + w.half_width <= 1.0);
  CHECK(w.half_width > 0.0);
}

TEST_CASE("wilson half width shrinks like n^-1/2") {
  const auto a = stats::wilson(250, 1000);
  const auto b = stats::wilson(1000, 4000);
  CHECK(a.half_width / b.half_width == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("summary and quantiles") {
  const std::vector<double> x{4, 1, 3, 2, 5};
  const auto s = stats::summarize(x);
  CHECK(s.mean == 3.0);
  CHECK(s.variance == 2.5);
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(stats::median(x) == 3.0);
  CHECK(stats::quantile(x, 0.25) == 2.0);
  CHECK(stats::quantile(std::vector<double>{1, 2}, 0.5) == 1.5);
}

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = stats::ols(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
}

TEST_CASE("weighted fit discounts low-weight outliers") {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{0, 1, 2, 3, 100}, w{1, 1, 1, 1, 1e-12};
  const auto fit = stats::ols(x, y, w);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  const std::vector<double> zero{1, 1, 1, 1, 0};
  CHECK_THROWS(stats::ols(x, y, zero));
}

TEST_CASE("ks statistic") {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4}, c{10, 11, 12, 13};
  CHECK(stats::ks_statistic(a, b) == 0.0);
  CHECK(stats::ks_statistic(a, c) == 1.0);
  CHECK(stats::ks_critical(10000, 10000, 0.01) == doctest::Approx(1.628 * std::sqrt(2.0 / 10000)).epsilon(0.01));
}

TEST_CASE("covariance estimate of correlated normals") {
  ReplicateRng rng(5, 0);
  std::vector<double> x(100000), y(100000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = 0.5 * x[i] + rng.normal();
  }
  const auto c = stats::covariance(x, y);
  CHECK(std::abs(c.value - 0.5) < 4.0 * c.standard_error);
}
