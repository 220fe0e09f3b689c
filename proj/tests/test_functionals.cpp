#include <cmath>
#include <vector>

#include "doctest.h"
#include "smallball/errors.hpp"
#include "smallball/functionals.hpp"
#include "smallball/kernels.hpp"
#include "smallball/stats.hpp"

using namespace smallball;

TEST_CASE("dyadic horizons") {
  const auto h = dyadic_horizons(1.0, 9);
  REQUIRE(h.size() == 10);
  CHECK(h.front() == 1.0);
  CHECK(h.back() == 512.0);
}

TEST_CASE("f = 1 gives I_T = T") {
  const auto path = sample_path(ProcessSpec::stationary_ou(), 0.0, 1.0 / 64, 64 * 16, 1);
  const std::vector<double> horizons{1, 2, 4, 8, 16};
  const auto series = integral_functional(path, FunctionSpec::constant(1.0), horizons);
  for (std::size_t k = 0; k < horizons.size(); ++k) CHECK(series.values[k] == doctest::Approx(horizons[k]).epsilon(1e-14));
}

TEST_CASE("I_T is non-decreasing along every path") {
  for (const auto& spec : {ProcessSpec::fbm(0.7), ProcessSpec::periodic_bridge(), ProcessSpec::stationary_ou()}) {
    const auto path = sample_path(spec, 0.0, 1.0 / 64, 64 * 8, 2);
    for (const auto& f : {parse_function("poly:0,0,1"), parse_function("x3sininv"), parse_function("trig:1,1,0,1")}) {
      const auto cum = cumulative_functional(path, f);
      for (std::size_t i = 1; i < cum.size(); ++i) REQUIRE(cum[i] >= cum[i - 1]);
    }
  }
}

TEST_CASE("horizons must lie on the grid") {
  const auto path = sample_path(ProcessSpec::stationary_ou(), 0.0, 0.1, 100, 1);
  const std::vector<double> off{1.05, 2, 3, 4, 5};
  CHECK_THROWS_AS(integral_functional(path, FunctionSpec::constant(1), off), PreconditionError);
  const std::vector<double> beyond{1, 2, 4, 8, 16};
  CHECK_THROWS_AS(integral_functional(path, FunctionSpec::constant(1), beyond), PreconditionError);
}

TEST_CASE("brownian E I_1 for f = x") {
  std::vector<double> values;
  const PathSampler sampler(ProcessSpec::fbm(0.5), UniformGrid{0.0, 1.0 / 64, 64});
  const std::vector<double> horizon{1.0};
  const auto f = parse_function("poly:0,1");
  for (std::uint64_t r = 0; r < 10000; ++r) {
    const auto path = sampler.sample(3, r);
    values.push_back(cumulative_functional(path, f).back());
  }
  const auto s = stats::summarize(values);
  CHECK(std::abs(s.mean - 0.5) < 4 * s.standard_error);
}

TEST_CASE("fit_rate on exact power laws") {
  const auto h = dyadic_horizons();
  std::vector<double> v, scaled;
  const double c = 3.0;
  for (double t : h) {
    v.push_back(std::pow(t, 0.8));
    scaled.push_back(c * c * std::pow(t, 0.8));
  }
  const auto fit = fit_rate(h, v);
  CHECK(fit.slope == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  const auto fit_c = fit_rate(h, scaled);
  CHECK(fit_c.slope == doctest::Approx(fit.slope).epsilon(1e-12));
  CHECK(fit_c.intercept - fit.intercept == doctest::Approx(2 * std::log(c)).epsilon(1e-12));
  CHECK_THROWS_AS(fit_rate(std::span(h).first(4), std::span(v).first(4)), PreconditionError);
  v[3] = 0.0;
  CHECK_THROWS_AS(fit_rate(h, v), PreconditionError);
}

TEST_CASE("scaling f shifts the fitted intercept on a simulated path") {
  const auto path = sample_path(ProcessSpec::stationary_ou(), 0.0, 1.0 / 64, 64 * 64, 4);
  const auto h = dyadic_horizons(1.0, 6);
  const auto a = integral_functional(path, parse_function("poly:0,0,1"), h);
  const auto b = integral_functional(path, parse_function("poly:0,0,2.5"), h);
  const auto fa = fit_rate(h, a.values), fb = fit_rate(h, b.values);
  CHECK(fb.slope == doctest::Approx(fa.slope).epsilon(1e-10));
  CHECK(fb.intercept - fa.intercept == doctest::Approx(2 * std::log(2.5)).epsilon(1e-10));
}

TEST_CASE("small divergence run is identical under both policies") {
  DivergenceConfig cfg;
  cfg.spec = ProcessSpec::stationary_ou();
  cfg.horizons = dyadic_horizons(1.0, 6);
  cfg.replicates = 8;
  cfg.seed = 5;
  cfg.exec = Exec::Serial;
  const auto serial = divergence_experiment(cfg);
  cfg.exec = Exec::Parallel;
  const auto parallel = divergence_experiment(cfg);
  CHECK(serial.pooled.slope == parallel.pooled.slope);
  CHECK(serial.replicate_slopes == parallel.replicate_slopes);
  CHECK(serial.min_scaled == parallel.min_scaled);
  CHECK(serial.median_horizon == 8.0);
  CHECK(serial.final_horizon == 64.0);
  CHECK(serial.dt == 1.0 / 64);
}

TEST_CASE("self-similar experiment preconditions and unit variance") {
  SelfSimilarConfig cfg;
  cfg.epsilon = 1.0;  // p H = 1
  CHECK_THROWS_AS(selfsimilar_lowerbound_experiment(cfg), PreconditionError);
  cfg.epsilon = 0.5;
  cfg.beta = 4.0;  // needs β > 1 / (1/2 - 1/4) = 4
  CHECK_THROWS_AS(selfsimilar_lowerbound_experiment(cfg), PreconditionError);
  CHECK(fbm_unit_integral_variance(0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  for (double h : {0.2, 0.7, 0.9}) CHECK(fbm_unit_integral_variance(h) == doctest::Approx(1 / (2 * h + 2)).epsilon(1e-9));
}

TEST_CASE("self-similar minima are positive") {
  SelfSimilarConfig cfg;
  cfg.replicates = 10;
  cfg.seed = 6;
  cfg.k_max = 3;
  const auto r = selfsimilar_lowerbound_experiment(cfg);
  CHECK(r.all_positive);
  CHECK(r.minima.size() == 10);
  for (double m : r.minima) CHECK(m > 0.0);
}

TEST_CASE("ergodic limit") {
  const auto ones = ergodic_limit(ProcessSpec::stationary_ou(), FunctionSpec::constant(1), 10, 5, 1);
  for (double v : ones.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  const auto sq = ergodic_limit(ProcessSpec::stationary_ou(), parse_function("poly:0,0,1"), 200, 100, 2);
  CHECK(sq.mean == doctest::Approx(0.75).epsilon(0.1));
  CHECK(sq.min > 0.3);
  const double v = fou_variance(0.7);
  const auto fou = ergodic_limit(ProcessSpec::fractional_ou(0.7), parse_function("poly:0,0,1"), 200, 40, 3);
  CHECK(fou.mean == doctest::Approx(3 * v * v).epsilon(0.15));
  CHECK_THROWS_AS(ergodic_limit(ProcessSpec::fbm(0.5), FunctionSpec::constant(1), 10, 5, 1), PreconditionError);
}
