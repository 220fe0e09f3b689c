#include "smallball/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"
#include "smallball/quadrature.hpp"
#include "smallball/stats.hpp"

namespace smallball {
namespace {

std::size_t grid_index(const UniformGrid& grid, double t) {
  const double pos = (t - grid.t0) / grid.dt;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-9 * std::max(1.0, pos) || rounded < 0.0 ||
      rounded > static_cast<double>(grid.steps))
    throw PreconditionError("horizon " + io::format_double(t) + " is not on the simulation grid");
  return static_cast<std::size_t>(rounded);
}

std::size_t steps_to(double horizon, double dt) {
  const double steps = std::ceil(horizon / dt - 1e-9);
  if (steps > static_cast<double>(kMaxSteps))
    throw PreconditionError("horizon " + io::format_double(horizon) + " with dt " + io::format_double(dt) +
                            " exceeds the 2^20-step memory guard");
  return static_cast<std::size_t>(std::max(steps, 1.0));
}

// Trapezoid integral of the sampled integrand g up to an off-grid time T.
double integral_at(std::span<const double> cumulative, std::span<const double> g, double dt, double t) {
  const double pos = t / dt;
  const auto j = static_cast<std::size_t>(std::floor(pos));
  if (j + 1 >= g.size()) return cumulative.back();
  const double frac = pos - static_cast<double>(j);
  const double g_t = g[j] + frac * (g[j + 1] - g[j]);
  return cumulative[j] + frac * dt * 0.5 * (g[j] + g_t);
}

}  // namespace

std::vector<double> dyadic_horizons(double t0, int doublings) {
  if (!(t0 > 0.0) || doublings < 0) throw PreconditionError("dyadic_horizons: need t0 > 0, doublings >= 0");
  std::vector<double> out;
  for (int k = 0; k <= doublings; ++k) out.push_back(std::ldexp(t0, k));
  return out;
}

double default_dt(const ProcessSpec& spec) {
  return default_method(spec.kind) == SimMethod::CholeskyExact ? 1.0 / 16.0 : 1.0 / 64.0;
}

std::vector<double> cumulative_functional(const SamplePath& path, const FunctionSpec& f) {
  std::vector<double> out(path.values.size());
  double prev = f.value(path.values[0]);
  prev *= prev;
  out[0] = 0.0;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    double g = f.value(path.values[i]);
    g *= g;
    out[i] = out[i - 1] + 0.5 * path.grid.dt * (prev + g);
    prev = g;
  }
  return out;
}

IntegralSeries integral_functional(const SamplePath& path, const FunctionSpec& f,
                                   std::span<const double> horizons) {
  if (path.grid.t0 != 0.0) throw PreconditionError("integral_functional: path must start at t = 0");
  const auto cumulative = cumulative_functional(path, f);
  IntegralSeries s;
  s.function = f.describe();
  s.spec = path.spec;
  s.seed = path.seed;
  s.replicate = path.replicate;
  for (double t : horizons) {
    s.horizons.push_back(t);
    s.values.push_back(cumulative[grid_index(path.grid, t)]);
  }
  return s;
}

RateFit fit_rate(std::span<const double> horizons, std::span<const double> values,
                 std::span<const double> weights) {
  if (horizons.size() != values.size()) throw PreconditionError("fit_rate: size mismatch");
  if (horizons.size() < 5) throw PreconditionError("fit_rate: needs at least 5 horizons");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0 && values[i] > 0.0))
      throw PreconditionError("fit_rate: horizons and values must be positive for a log-log fit");
    x.push_back(std::log(horizons[i]));
    y.push_back(std::log(values[i]));
  }
  const stats::LineFit line = stats::ols(x, y, weights);
  RateFit fit;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  fit.residuals = line.residuals;
  fit.t_lo = *std::min_element(horizons.begin(), horizons.end());
  fit.t_hi = *std::max_element(horizons.begin(), horizons.end());
  return fit;
}

DivergenceResult divergence_experiment(const DivergenceConfig& cfg) {
  cfg.spec.validate();
  if (cfg.replicates == 0) throw PreconditionError("divergence: replicates must be positive");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw PreconditionError("divergence: epsilon must lie in (0,1)");
  if (cfg.horizons.size() < 5) throw PreconditionError("divergence: needs at least 5 horizons");
  if (!std::is_sorted(cfg.horizons.begin(), cfg.horizons.end()))
    throw PreconditionError("divergence: horizons must be increasing");
  DivergenceResult out;
  out.dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg.spec);
  const std::size_t steps = steps_to(cfg.horizons.back(), out.dt);
  const PathSampler sampler(cfg.spec, UniformGrid{0.0, out.dt, steps});

  out.series.resize(cfg.replicates);
  for_each_index(cfg.replicates, cfg.exec, [&](std::size_t r) {
    out.series[r] = integral_functional(sampler.sample(cfg.seed, r), cfg.f, cfg.horizons);
  });

  const std::size_t n_h = cfg.horizons.size();
  const std::size_t median_index = n_h / 2;
  out.median_horizon = cfg.horizons[median_index];
  out.final_horizon = cfg.horizons.back();
  std::vector<double> mean(n_h, 0.0), second(n_h, 0.0);
  const auto reps = static_cast<double>(cfg.replicates);
  for (const auto& s : out.series) {
    for (std::size_t k = 0; k < n_h; ++k) {
      mean[k] += s.values[k] / reps;
      second[k] += s.values[k] * s.values[k] / reps;
    }
    auto scaled = [&](std::size_t k) { return std::pow(cfg.horizons[k], -1.0 + cfg.epsilon) * s.values[k]; };
    double lowest = scaled(0);
    for (std::size_t k = 1; k < n_h; ++k) lowest = std::min(lowest, scaled(k));
    out.min_scaled.push_back(lowest);
    const bool up = scaled(n_h - 1) > scaled(median_index);
    out.increasing.push_back(up ? 1 : 0);
    if (up) ++out.increasing_count;
    bool positive = std::all_of(s.values.begin(), s.values.end(), [](double v) { return v > 0.0; });
    out.replicate_slopes.push_back(positive ? fit_rate(cfg.horizons, s.values).slope
                                            : std::numeric_limits<double>::quiet_NaN());
  }
  out.pooled_ols = fit_rate(cfg.horizons, mean);
  // Delta method: Var log(mean) ≈ s^2 / (R mean^2). Falls back to unit
  // weights when a horizon has no spread (deterministic integrand, R = 1).
  std::vector<double> weights(n_h);
  bool usable = cfg.replicates > 1;
  for (std::size_t k = 0; k < n_h && usable; ++k) {
    const double var = (second[k] - mean[k] * mean[k]) * reps / (reps - 1.0);
    usable = var > 1e-12 * mean[k] * mean[k];
    weights[k] = usable ? reps * mean[k] * mean[k] / var : 1.0;
  }
  out.pooled = usable ? fit_rate(cfg.horizons, mean, weights) : out.pooled_ols;
  return out;
}

SelfSimilarResult selfsimilar_lowerbound_experiment(const SelfSimilarConfig& cfg) {
  if (!(cfg.hurst > 0.0 && cfg.hurst < 1.0)) throw PreconditionError("selfsim: hurst must lie in (0,1)");
  if (!(cfg.p > 0.0)) throw PreconditionError("selfsim: p must be positive");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < cfg.p * cfg.hurst))
    throw PreconditionError("selfsim: requires 0 < epsilon < p*H (epsilon=" + io::format_double(cfg.epsilon) +
                            ", p*H=" + io::format_double(cfg.p * cfg.hurst) + ")");
  const double beta_min = 1.0 / (cfg.hurst - cfg.epsilon / cfg.p);
  if (!(cfg.beta > beta_min))
    throw PreconditionError("selfsim: requires beta > (H - epsilon/p)^-1 = " + io::format_double(beta_min));
  if (cfg.k_max < 2) throw PreconditionError("selfsim: k_max must be >= 2");
  if (cfg.replicates == 0) throw PreconditionError("selfsim: replicates must be positive");

  SelfSimilarResult out;
  for (std::size_t k = (cfg.k_max + 1) / 2; k <= cfg.k_max; ++k) out.ks.push_back(static_cast<double>(k));
  const double t_max = std::pow(static_cast<double>(cfg.k_max), cfg.beta);
  const PathSampler sampler(ProcessSpec::fbm(cfg.hurst), UniformGrid{0.0, cfg.dt, steps_to(t_max, cfg.dt)});

  out.normalized.assign(cfg.replicates, std::vector<double>(out.ks.size()));
  for_each_index(cfg.replicates, cfg.exec, [&](std::size_t r) {
    const SamplePath path = sampler.sample(cfg.seed, r);
    std::vector<double> g(path.values.size()), cumulative(path.values.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(std::abs(path.values[i]), cfg.p);
    for (std::size_t i = 1; i < g.size(); ++i) cumulative[i] = cumulative[i - 1] + 0.5 * cfg.dt * (g[i - 1] + g[i]);
    for (std::size_t j = 0; j < out.ks.size(); ++j) {
      const double horizon = std::pow(out.ks[j], cfg.beta);
      out.normalized[r][j] =
          std::pow(out.ks[j], -cfg.beta * (1.0 + cfg.epsilon)) * integral_at(cumulative, g, cfg.dt, horizon);
    }
  });
  out.all_positive = true;
  for (const auto& row : out.normalized) {
    const double m = *std::min_element(row.begin(), row.end());
    out.minima.push_back(m);
    out.all_positive = out.all_positive && m > 0.0;
    if (row.back() > row.front()) ++out.growing_count;
  }
  return out;
}

double fbm_unit_integral_variance(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw PreconditionError("fbm_unit_integral_variance: hurst must lie in (0,1)");
  const double h2 = 2.0 * hurst;
  bool ok = true;
  auto inner = [&](double s) {
    auto k = [&](double u) { return 0.5 * (std::pow(s, h2) + std::pow(u, h2) - std::pow(std::abs(s - u), h2)); };
    const QuadratureResult left = integrate(k, 0.0, s);
    const QuadratureResult right = integrate(k, s, 1.0);
    ok = ok && left.converged && right.converged;
    return left.value + right.value;
  };
  const QuadratureResult r = integrate(inner, 0.0, 1.0);
  if (!(ok && r.converged)) throw QuadratureError("fbm_unit_integral_variance: quadrature did not converge");
  return r.value;
}

ErgodicSummary ergodic_limit(const ProcessSpec& spec, const FunctionSpec& f, double horizon,
                             std::size_t replicates, std::uint64_t seed, double dt, Exec exec) {
  spec.validate();
  if (!spec.is_stationary())
    throw PreconditionError("ergodic_limit: " + spec.describe() + " is not stationary");
  if (!(horizon > 0.0) || replicates == 0) throw PreconditionError("ergodic_limit: need horizon > 0 and replicates > 0");
  if (dt <= 0.0) dt = default_dt(spec);
  const std::size_t steps = steps_to(horizon, dt);
  const PathSampler sampler(spec, UniformGrid{0.0, dt, steps});
  ErgodicSummary out;
  out.values.resize(replicates);
  for_each_index(replicates, exec, [&](std::size_t r) {
    const auto cumulative = cumulative_functional(sampler.sample(seed, r), f);
    out.values[r] = cumulative.back() / (static_cast<double>(steps) * dt);
  });
  const stats::Summary s = stats::summarize(out.values);
  out.mean = s.mean;
  out.variance = s.variance;
  out.min = s.min;
  out.max = s.max;
  return out;
}

}  // namespace smallball
