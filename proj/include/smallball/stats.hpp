#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smallball::stats {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double center = 0.0;
  double half_width = 0.0;
};

/// Wilson score interval for `successes` out of `trials`.
Interval wilson(std::size_t successes, std::size_t trials, double z = kZ95);

struct Summary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double standard_error = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

Summary summarize(std::span<const double> xs);

/// Linear-interpolated quantile, q in [0, 1]. Copies its input.
double quantile(std::span<const double> xs, double q);
inline double median(std::span<const double> xs) { return quantile(xs, 0.5); }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least squares y = intercept + slope * x; needs >= 2 distinct x.
/// Least squares line; with weights, minimises Σ w_i r_i^2 and reports the
/// weighted r^2.
LineFit ols(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value c(alpha) * sqrt((n+m)/(n m)); alpha in {0.01, 0.05}.
double ks_critical(std::size_t n, std::size_t m, double alpha);

/// Sample covariance of paired observations (unbiased) with the standard
/// error of the product-moment estimate.
struct CovarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};
CovarianceEstimate covariance(std::span<const double> x, std::span<const double> y);

}  // namespace smallball::stats
