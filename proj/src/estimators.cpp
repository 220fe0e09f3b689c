#include "smallball/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "smallball/errors.hpp"
#include "smallball/functionals.hpp"
#include "smallball/io.hpp"
#include "smallball/rng.hpp"
#include "smallball/stats.hpp"

namespace smallball {
namespace {

// Separate key for the fBm endpoint so it never shares a stream with Y.
constexpr std::uint64_t kEndpointKey = 0x9e3779b97f4a7c15ULL;

}  // namespace

double Diffusion::operator()(double s) const { return base + amplitude * std::sin(frequency * s); }
double Diffusion::lower() const { return std::abs(base) - std::abs(amplitude); }
double Diffusion::upper() const { return std::abs(base) + std::abs(amplitude); }

std::size_t OUModelConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

void OUModelConfig::validate() const {
  if (!(theta > 0.0)) throw PreconditionError("ou model: theta must be positive");
  if (!(dt > 0.0) || !(horizon > dt)) throw PreconditionError("ou model: need 0 < dt < T");
  if (!(theta * dt < 0.1))
    throw PreconditionError("ou model: theta*dt = " + io::format_double(theta * dt) + " must be below 0.1");
  if (steps() > kMaxSteps) throw PreconditionError("ou model: T/dt exceeds the 2^20-step memory guard");
  if (g.noise_free()) return;
  const double c = g.lower();
  const double cap = g.upper();
  if (!(c > 0.0))
    throw PreconditionError("ou model: diffusion bound c = " + io::format_double(c) + " must be positive");
  for (std::size_t k = 0; k <= steps(); ++k) {
    const double v = std::abs(g(static_cast<double>(k) * dt));
    if (v < c - 1e-12 || v > cap + 1e-12) throw PreconditionError("ou model: g leaves [c, C] on the grid");
  }
}

ModelPath simulate_ou_model(const OUModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate) {
  cfg.validate();
  ModelPath path{UniformGrid{0.0, cfg.dt, cfg.steps()}, {}};
  path.values.resize(path.grid.points());
  ReplicateRng rng(seed, replicate);
  const double sq = std::sqrt(cfg.dt);
  double y = cfg.y0;
  path.values[0] = y;
  for (std::size_t k = 0; k < path.grid.steps; ++k) {
    const double noise = cfg.g.noise_free() ? 0.0 : cfg.g(path.grid.time(k)) * sq * rng.normal();
    y += -cfg.theta * y * cfg.dt + noise;
    path.values[k + 1] = y;
  }
  return path;
}

double ou_drift_estimator(std::span<const double> y, double dt) {
  if (y.size() < 2) throw PreconditionError("ou_drift_estimator: path needs at least 2 points");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    num += y[k] * (y[k + 1] - y[k]);
    den += y[k] * y[k] * dt;
  }
  if (!(den > 0.0)) throw PreconditionError("ou_drift_estimator: degenerate path (zero denominator)");
  return -num / den;
}

double ou_drift_estimator(const ModelPath& path) { return ou_drift_estimator(path.values, path.grid.dt); }

double ou_half_step_gap(const OUModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate) {
  cfg.validate();
  OUModelConfig fine = cfg;
  fine.dt = cfg.dt / 2.0;
  fine.validate();
  const std::size_t n = cfg.steps();
  ReplicateRng rng(seed, replicate);
  const double sq = std::sqrt(fine.dt);
  std::vector<double> coarse(n + 1), refined(2 * n + 1);
  coarse[0] = refined[0] = cfg.y0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w1 = sq * rng.normal();
    const double w2 = sq * rng.normal();
    const double t = static_cast<double>(k) * cfg.dt;
    const double gc = cfg.g.noise_free() ? 0.0 : cfg.g(t);
    const double gf = cfg.g.noise_free() ? 0.0 : cfg.g(t + fine.dt);
    coarse[k + 1] = coarse[k] - cfg.theta * coarse[k] * cfg.dt + gc * (w1 + w2);
    const double mid = refined[2 * k] - cfg.theta * refined[2 * k] * fine.dt + gc * w1;
    refined[2 * k + 1] = mid;
    refined[2 * k + 2] = mid - cfg.theta * mid * fine.dt + gf * w2;
  }
  return std::abs(ou_drift_estimator(coarse, cfg.dt) - ou_drift_estimator(refined, fine.dt));
}

void FracModelConfig::validate() const {
  driver.validate();
  if (!(hurst > 0.0 && hurst < 1.0)) throw PreconditionError("frac model: hurst must lie in (0,1)");
  if (driver.kind != ProcessKind::StationaryOU && driver.kind != ProcessKind::PeriodicBridge &&
      driver.kind != ProcessKind::FractionalOU)
    throw PreconditionError("frac model: driver must be a stationary OU, periodic bridge or fractional OU process");
  if (!(horizon > 0.0)) throw PreconditionError("frac model: horizon must be positive");
  if (!(epsilon > 0.0)) throw PreconditionError("frac model: epsilon must be positive");
}

namespace {

PathSampler driver_sampler(const FracModelConfig& cfg) {
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(cfg.driver);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
  if (steps == 0 || steps > kMaxSteps) throw PreconditionError("frac model: T/dt outside [1, 2^20]");
  return PathSampler(cfg.driver, UniformGrid{0.0, dt, steps});
}

FracEstimate estimate_with(const PathSampler& sampler, const FracModelConfig& cfg, std::uint64_t seed,
                           std::uint64_t replicate) {
  const auto cumulative = cumulative_functional(sampler.sample(seed, replicate), cfg.f);
  FracEstimate e;
  e.integral = cumulative.back();
  if (!(e.integral > 0.0)) throw PreconditionError("frac_drift_estimator: integral of g(Y) vanished");
  ReplicateRng rng(seed ^ kEndpointKey, replicate);
  const double t = static_cast<double>(sampler.grid().steps) * sampler.grid().dt;
  e.b_t = std::pow(t, cfg.hurst) * rng.normal();
  e.x_t = cfg.x0 + cfg.theta * e.integral + e.b_t;
  e.theta_hat = e.x_t / e.integral;
  e.x0_term = cfg.x0 / e.integral;
  e.noise_term = e.b_t / e.integral;
  const double scale = std::pow(t, cfg.hurst + cfg.epsilon);
  e.b_scaled = e.b_t / scale;
  e.integral_scaled = e.integral / scale;
  return e;
}

}  // namespace

FracEstimate frac_drift_estimator(const FracModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate) {
  cfg.validate();
  return estimate_with(driver_sampler(cfg), cfg, seed, replicate);
}

std::vector<double> ou_estimates(const OUModelConfig& cfg, std::size_t replicates, std::uint64_t seed, Exec exec) {
  cfg.validate();
  std::vector<double> out(replicates);
  for_each_index(replicates, exec,
                 [&](std::size_t r) { out[r] = ou_drift_estimator(simulate_ou_model(cfg, seed, r)); });
  return out;
}

std::vector<FracEstimate> frac_estimates(const FracModelConfig& cfg, std::size_t replicates, std::uint64_t seed,
                                         Exec exec) {
  cfg.validate();
  const PathSampler sampler = driver_sampler(cfg);
  std::vector<FracEstimate> out(replicates);
  for_each_index(replicates, exec, [&](std::size_t r) { out[r] = estimate_with(sampler, cfg, seed, r); });
  return out;
}

double median_abs_error(std::span<const double> estimates, double theta) {
  std::vector<double> err;
  err.reserve(estimates.size());
  for (double e : estimates) err.push_back(std::abs(e - theta));
  return stats::median(err);
}

}  // namespace smallball
