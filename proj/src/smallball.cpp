#include "smallball/smallball.hpp"

#include <algorithm>
#include <cmath>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"
#include "smallball/simulate.hpp"
#include "smallball/stats.hpp"

namespace smallball {
namespace {

using io::format_double;

std::size_t steps_for(double length, double dt, const char* what) {
  const double ratio = length / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw PreconditionError(std::string(what) + ": length " + format_double(length) +
                            " is not a multiple of dt " + format_double(dt));
  return static_cast<std::size_t>(rounded);
}

// ∫_0^∞ e^{-z} |c - z|^{a-1} dz.
QuadratureResult exp_weighted_power(double c, double a) {
  if (c <= 0.0) return fou_detail::upper(-c, a);
  QuadratureResult r = fou_detail::lower(c, a);
  r.value += std::exp(-c) * std::tgamma(a);
  return r;
}

// ∫_0^x e^y y^{a-1} dy.
QuadratureResult exp_power_primitive(double x, double a) {
  return integrate_left_power([](double y) { return std::exp(y); }, 0.0, x, a);
}

}  // namespace

bool SmallBallParams::admissible(double eta, double delta) const {
  return inadmissibility(eta, delta).empty();
}

std::string SmallBallParams::inadmissibility(double eta, double delta) const {
  if (!(delta > 0.0 && delta < delta_star))
    return "delta " + format_double(delta) + " outside (0, delta*=" + format_double(delta_star) + ")";
  if (!(eta > 0.0)) return "eta must be positive";
  if (eta_star && !(eta < *eta_star))
    return "eta " + format_double(eta) + " exceeds eta*=" + format_double(*eta_star);
  if (regime == SmallBallRegime::Relaxed) {
    const double curve = *k3 * std::pow(delta, *gamma);
    if (!(eta < curve))
      return "eta " + format_double(eta) + " exceeds K3*delta^gamma=" + format_double(curve) +
             " (relaxed small-ball admissibility)";
  }
  return {};
}

double SmallBallParams::bound(double eta, double delta) const {
  return k1 * std::exp(-k2 * std::pow(eta, -lambda) * std::pow(delta, mu));
}

SmallBallParams derive_params(double c1, double c2, double c3, double hurst,
                              Correlation correlation) {
  if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0)) throw PreconditionError("derive_params: constants must be positive");
  if (c1 > c2) throw PreconditionError("derive_params: requires c1 <= c2");
  if (!(hurst > 0.0 && hurst <= 1.0)) throw PreconditionError("derive_params: hurst must lie in (0,1]");

  SmallBallParams p;
  p.regime = SmallBallRegime::Relaxed;
  p.k1 = 1.0;
  const double c4 = std::sqrt(c1) / (std::pow(2.0, 2.0 + hurst) * std::sqrt(2.0));
  const double c5 = std::pow(4.0 * std::sqrt(2.0) / std::sqrt(c1), 1.0 / hurst);
  p.k3 = c4;
  switch (correlation) {
    case Correlation::Positive:
      if (hurst <= 0.5)
        throw PreconditionError("derive_params: positive correlation requires hurst > 1/2");
      p.delta_star = c3;
      p.eta_star = 1.0;
      p.gamma = hurst;
      p.mu = 2.0 - 2.0 * hurst;
      p.lambda = 2.0 / hurst - 2.0;
      p.k2 = 1.0 / (16.0 * c2 * c2 * std::pow(c5, 2.0 + 2.0 * hurst));
      break;
    case Correlation::BridgeNegative:
      // S < 2 a Δ^2 with a = C5 η^2 / Δ.
      p.delta_star = c3;
      p.gamma = 0.5;
      p.mu = 1.0;
      p.lambda = 2.0;
      p.k2 = 1.0 / (32.0 * c5 * c5 * c5);
      break;
    case Correlation::OUNegative:
      // S <= (1 + e/2) a Δ^2 with a = 1/2 and aΔ < 1/θ, i.e. Δ* = 2 c3.
      p.delta_star = 2.0 * c3;
      p.gamma = 0.5;
      p.mu = 1.0;
      p.lambda = 2.0;
      p.k2 = 1.0 / (32.0 * c5 * c5 * c5) / ((1.0 + std::exp(1.0) / 2.0) / 2.0);
      break;
  }
  return p;
}

SmallBallParams sawtooth_params() {
  SmallBallParams p;
  p.regime = SmallBallRegime::Rectangle;
  p.delta_star = 2.0;
  p.eta_star = 1.0;
  p.lambda = 2.0;
  p.mu = 2.0;
  p.k1 = 1.0 / exp_small_ball_normalizer();
  p.k2 = 0.25;
  return p;
}

std::optional<SmallBallParams> default_params(const ProcessSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ProcessKind::PeriodicBridge:
      // (t-s)/2 <= variogram <= t-s for |t-s| <= 1/2.
      return derive_params(0.5, 1.0, 1.0, 0.5, Correlation::BridgeNegative);
    case ProcessKind::StationaryOU:
      // e^{-1}(t-s) <= (1 - e^{-θ(t-s)})/θ <= t-s for θ(t-s) <= 1.
      return derive_params(std::exp(-1.0), 1.0, 1.0 / spec.theta, 0.5, Correlation::OUNegative);
    case ProcessKind::FBM:
      if (spec.hurst <= 0.5) return std::nullopt;
      return derive_params(1.0, 1.0, 1.0, spec.hurst, Correlation::Positive);
    case ProcessKind::RandomSawtooth:
      if (spec.xi_law != XiLaw::ExpSmallBall) return std::nullopt;
      return sawtooth_params();
    case ProcessKind::FractionalOU:
    case ProcessKind::TemperedStationary:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> li_shao_bound(double a, double eta, double cov_sq_sum, double var_sum) {
  if (!(a > 0.0 && a <= 0.5)) throw PreconditionError("li_shao_bound: a must lie in (0, 1/2]");
  if (!(eta > 0.0 && cov_sq_sum > 0.0 && var_sum > 0.0))
    throw PreconditionError("li_shao_bound: inputs must be positive");
  if (a * var_sum < 32.0 * eta * eta) return std::nullopt;
  return std::exp(-std::pow(eta, 4) / (16.0 * a * a * cov_sq_sum));
}

IncrementSums increment_cov_sum(const ProcessSpec& spec, double a, double delta, double s) {
  spec.validate();
  if (!(a > 0.0 && a <= 0.5)) throw PreconditionError("increment_cov_sum: a must lie in (0, 1/2]");
  if (!(delta > 0.0)) throw PreconditionError("increment_cov_sum: delta must be positive");
  if (!(s >= 0.0)) throw PreconditionError("increment_cov_sum: s must be >= 0");
  // Guard floor() against 1/a landing just below an integer.
  const auto m = static_cast<std::size_t>(std::floor(1.0 / a + 1e-12));
  const double h = a * delta;
  IncrementSums out;
  out.count = m - 1;

  // xi[i-2][j-2] = E ξ_i ξ_j for i, j = 2..m.
  std::vector<double> cov((m - 1) * (m - 1));
  auto at = [&](std::size_t i, std::size_t j) -> double& { return cov[(i - 2) * (m - 1) + (j - 2)]; };
  if (spec.is_stationary()) {
    std::vector<double> r(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
      const QuadratureResult q = stationary_autocovariance(spec, static_cast<double>(k) * h);
      r[k] = q.value;
      out.quadrature_error += 4.0 * q.abs_error_estimate;
    }
    for (std::size_t i = 2; i <= m; ++i)
      for (std::size_t j = 2; j <= m; ++j) {
        const std::size_t k = i > j ? i - j : j - i;
        const double below = k == 0 ? r[1] : r[k - 1];
        at(i, j) = 2.0 * r[k] - below - r[k + 1];
      }
  } else {
    auto c = [&](std::size_t i, std::size_t j) {
      return covariance(spec, s + static_cast<double>(i) * h, s + static_cast<double>(j) * h).value;
    };
    for (std::size_t i = 2; i <= m; ++i)
      for (std::size_t j = 2; j <= m; ++j)
        at(i, j) = c(i, j) - c(i, j - 1) - c(i - 1, j) + c(i - 1, j - 1);
  }
  for (std::size_t i = 2; i <= m; ++i) {
    out.var_sum += at(i, i);
    for (std::size_t j = 2; j <= m; ++j) out.cov_sq_sum += at(i, j) * at(i, j);
  }
  return out;
}

FouCrossTerms fou_cross_terms(double hurst, double a, double delta, std::size_t i, std::size_t j) {
  if (!(hurst > 0.5 && hurst < 1.0)) throw PreconditionError("fou_cross_terms: hurst must lie in (1/2,1)");
  if (!(a > 0.0 && a <= 0.5 && delta > 0.0)) throw PreconditionError("fou_cross_terms: need a in (0,1/2], delta > 0");
  if (!(2 <= i && i < j && static_cast<double>(j) <= 1.0 / a + 1e-12))
    throw PreconditionError("fou_cross_terms: requires 2 <= i < j <= 1/a");
  const double alpha = 2.0 * hurst - 1.0;
  const double c_h = hurst * alpha;
  const double h = a * delta;
  const double gap = static_cast<double>(j - i);
  const double q = gap * h;
  const double damp = std::expm1(-h);  // e^{-h} - 1

  FouCrossTerms out;
  double err = 0.0, inner_err = 0.0;
  bool ok = true;
  auto track = [&](const QuadratureResult& r) {
    err += r.abs_error_estimate;
    ok = ok && r.converged;
    return r.value;
  };
  auto track_inner = [&](const QuadratureResult& r) {
    inner_err = std::max(inner_err, r.abs_error_estimate);
    ok = ok && r.converged;
    return r.value;
  };

  // I1: both legs damped; C_H I5(q) is the autocovariance at lag q.
  const QuadratureResult r_q = stationary_autocovariance(ProcessSpec::fractional_ou(hurst), q);
  out.i1 = damp * damp * r_q.value;
  err += damp * damp * r_q.abs_error_estimate;

  // Mixed terms: one damped leg on (-∞, t_{k-1}), one local leg on [t_{k-1}, t_k).
  auto tb_integrand = [&](double z) {
    return std::exp(-z) * track_inner(exp_weighted_power(z + (gap - 1.0) * h, alpha));
  };
  const double tb = c_h * damp * track(integrate(tb_integrand, 0.0, h));
  auto tc_integrand = [&](double w) {
    return std::exp(-w) * track_inner(fou_detail::upper((gap + 1.0) * h - w, alpha));
  };
  const double tc = c_h * damp * track(integrate(tc_integrand, 0.0, h));
  out.i2 = 0.5 * (tb + tc);

  // I3: both legs local; |q + z - w|^{α-1} is singular only at the corner
  // z = 0, w = h when j - i = 1.
  auto i3_inner = [&](double z) {
    const double c = q + z;
    double inner = 0.0;
    if (c > 2.0 * h) {
      inner = track_inner(integrate([&](double w) { return std::exp(-w) * std::pow(c - w, alpha - 1.0); }, 0.0, h));
    } else {
      inner = std::exp(-c) * (track_inner(exp_power_primitive(c, alpha)) -
                                   track_inner(exp_power_primitive(c - h, alpha)));
    }
    return std::exp(-z) * inner;
  };
  out.i3 = c_h * track(integrate(i3_inner, 0.0, h));

  out.total = out.i1 + 2.0 * out.i2 + out.i3;
  out.positive = out.total > 0.0;
  out.quadrature_error = c_h * (err + 4.0 * h * inner_err);
  if (!ok) throw QuadratureError("fou_cross_terms: quadrature did not converge");
  return out;
}

std::vector<SmallBallResult> small_ball_sweep(const ProcessSpec& spec, double s, double delta,
                                              std::span<const double> etas,
                                              const SmallBallOptions& opts) {
  spec.validate();
  if (!(s >= 0.0)) throw PreconditionError("small_ball: s must be >= 0");
  if (!(delta > 0.0)) throw PreconditionError("small_ball: delta must be positive");
  if (opts.replicates < 1000) throw PreconditionError("small_ball: needs at least 1000 replicates");
  const double dt = opts.dt > 0.0 ? opts.dt : delta / 64.0;
  if (dt > delta / 32.0 * (1.0 + 1e-12))
    throw PreconditionError("small_ball: dt must be <= delta/32");
  const std::size_t coarse_steps = steps_for(delta, dt, "small_ball");

  // Increments over [s, s+Δ]. FBM has stationary increments, so the window
  // is simulated from 0; every other kind is simulated at its true phase s.
  const double t0 = spec.kind == ProcessKind::FBM ? 0.0 : s;
  const PathSampler sampler(spec, UniformGrid{t0, dt / 2.0, 2 * coarse_steps});
  std::vector<double> sup_coarse(opts.replicates), sup_fine(opts.replicates);
  for_each_index(opts.replicates, opts.exec, [&](std::size_t r) {
    ReplicateRng rng(opts.seed, r);
    std::vector<double> x(sampler.grid().points());
    sampler.sample_into(rng, x);
    double coarse = 0.0, fine = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) {
      const double d = std::abs(x[k] - x[0]);
      fine = std::max(fine, d);
      if (k % 2 == 0) coarse = std::max(coarse, d);
    }
    sup_coarse[r] = coarse;
    sup_fine[r] = fine;
  });
  std::sort(sup_coarse.begin(), sup_coarse.end());
  std::sort(sup_fine.begin(), sup_fine.end());

  const std::optional<SmallBallParams> params = opts.params ? opts.params : default_params(spec);
  std::vector<SmallBallResult> results;
  results.reserve(etas.size());
  for (double eta : etas) {
    if (!(eta > 0.0)) throw PreconditionError("small_ball: eta must be positive");
    auto count_le = [&](const std::vector<double>& v) {
      return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), eta) - v.begin());
    };
    SmallBallResult res;
    res.s = s;
    res.delta = delta;
    res.eta = eta;
    res.dt = dt;
    res.replicates = opts.replicates;
    const std::size_t hits = count_le(sup_coarse);
    const std::size_t hits_fine = count_le(sup_fine);
    const double n = static_cast<double>(opts.replicates);
    res.p_hat = static_cast<double>(hits) / n;
    res.half_width = stats::wilson(hits, opts.replicates).half_width;
    res.p_hat_refined = static_cast<double>(hits_fine) / n;
    res.half_width_refined = stats::wilson(hits_fine, opts.replicates).half_width;
    res.refinement_stable = std::abs(res.p_hat - res.p_hat_refined) <= res.half_width;
    if (!params) {
      res.note = "no analytic bound for " + spec.describe();
    } else {
      res.note = params->inadmissibility(eta, delta);
      res.admissible = res.note.empty();
      if (res.admissible) res.analytic_bound = params->bound(eta, delta);
    }
    results.push_back(std::move(res));
  }
  return results;
}

SmallBallResult empirical_small_ball(const ProcessSpec& spec, double s, double delta, double eta,
                                     const SmallBallOptions& opts) {
  const double etas[] = {eta};
  return small_ball_sweep(spec, s, delta, etas, opts).front();
}

std::optional<double> grr_m(double r, double rho, double beta) {
  const double kappa = r * rho - r * beta - 2.0;
  if (kappa <= -1.0) return std::nullopt;
  return 2.0 / ((kappa + 1.0) * (kappa + 2.0));
}

HolderTailResult empirical_holder_tail(const ProcessSpec& spec, double beta, double h,
                                       const HolderTailOptions& opts) {
  spec.validate();
  if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("holder_tail: beta must lie in (0,1)");
  if (!(h > 0.0)) throw PreconditionError("holder_tail: h must be positive");
  if (opts.replicates == 0) throw PreconditionError("holder_tail: replicates must be positive");
  const std::size_t steps = steps_for(opts.window, opts.dt, "holder_tail");
  const double t0 = spec.kind == ProcessKind::FBM ? 0.0 : opts.s;
  const PathSampler sampler(spec, UniformGrid{t0, opts.dt, steps});
  const std::size_t n = sampler.grid().points();

  std::vector<char> exceeded(opts.replicates);
  std::vector<double> lag_moments(opts.replicates * steps);  // per replicate, lags 1..steps
  for_each_index(opts.replicates, opts.exec, [&](std::size_t rep) {
    ReplicateRng rng(opts.seed, rep);
    std::vector<double> x(n);
    sampler.sample_into(rng, x);
    double worst = 0.0;
    double* moments = lag_moments.data() + rep * steps;
    for (std::size_t lag = 1; lag < n; ++lag) {
      const double scale = std::pow(static_cast<double>(lag) * opts.dt, beta);
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        const double d = std::abs(x[i + lag] - x[i]);
        worst = std::max(worst, d / scale);
        acc += std::pow(d, opts.r);
      }
      moments[lag - 1] = acc / static_cast<double>(n - lag);
    }
    exceeded[rep] = worst >= h;
  });

  HolderTailResult out;
  const auto hits = static_cast<std::size_t>(std::count(exceeded.begin(), exceeded.end(), 1));
  out.tail = static_cast<double>(hits) / static_cast<double>(opts.replicates);
  out.half_width = stats::wilson(hits, opts.replicates).half_width;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double sum = 0.0;
    for (std::size_t rep = 0; rep < opts.replicates; ++rep) sum += lag_moments[rep * steps + lag - 1];
    const double mean = sum / static_cast<double>(opts.replicates);
    const double norm = std::pow(static_cast<double>(lag) * opts.dt, opts.r * opts.rho);
    out.moment_constant = std::max(out.moment_constant, mean / norm);
  }
  out.grr_m = grr_m(opts.r, opts.rho, beta);
  if (out.grr_m) out.reference = out.moment_constant * *out.grr_m / std::pow(h, opts.r);
  return out;
}

}  // namespace smallball
