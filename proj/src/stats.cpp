#include "smallball/stats.hpp"

#include <algorithm>
#include <cmath>

#include "smallball/errors.hpp"

namespace smallball::stats {

Interval wilson(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw PreconditionError("wilson: no trials");
  if (successes > trials) throw PreconditionError("wilson: successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  Interval out;
  out.center = (p + z2 / (2.0 * n)) / denom;
  out.half_width = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return out;
}

Summary summarize(std::span<const double> xs) {
  if (xs.empty()) throw PreconditionError("summarize: empty sample");
  Summary s;
  s.count = xs.size();
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  s.min = xs.front();
  s.max = xs.front();
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
  s.standard_error = std::sqrt(s.variance / n);
  return s;
}

double quantile(std::span<const double> xs, double q) {
  if (xs.empty()) throw PreconditionError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("quantile: q must lie in [0,1]");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

LineFit ols(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
  if (x.size() != y.size()) throw PreconditionError("ols: size mismatch");
  if (x.size() < 2) throw PreconditionError("ols: need at least two points");
  if (!weights.empty() && weights.size() != x.size()) throw PreconditionError("ols: weight count mismatch");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double n = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w(i) > 0.0)) throw PreconditionError("ols: weights must be positive");
    n += w(i);
    mx += w(i) * x[i];
    my += w(i) * y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w(i) * (x[i] - mx) * (x[i] - mx);
    sxy += w(i) * (x[i] - mx) * (y[i] - my);
    syy += w(i) * (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("ols: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  fit.residuals.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += w(i) * fit.residuals[i] * fit.residuals[i];
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  return fit;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw PreconditionError("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  double c = 0.0;
  if (alpha == 0.01) c = 1.628;
  else if (alpha == 0.05) c = 1.358;
  else throw PreconditionError("ks_critical: alpha must be 0.01 or 0.05");
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

CovarianceEstimate covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("covariance: need paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - mx) * (y[i] - my);
  c /= (n - 1.0);
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (x[i] - mx) * (y[i] - my) - c;
    v += d * d;
  }
  v /= (n - 1.0);
  return {c, std::sqrt(v / n)};
}

}  // namespace smallball::stats
