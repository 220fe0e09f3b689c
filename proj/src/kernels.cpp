#include "smallball/kernels.hpp"

#include <cmath>
#include <string>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"

namespace smallball {
namespace {

// Infinite domains are cut at z = 40 (in units of 1/theta); the neglected
// tails are bounded explicitly and added to the reported error.
constexpr double kTruncation = 40.0;
constexpr double kSeriesLimit = 60.0;

using io::format_double;

QuadratureResult exact(double v) { return {v, 0.0, 0, true}; }

void require_converged(const QuadratureResult& r, const char* what) {
  if (!r.converged)
    throw QuadratureError(std::string(what) + ": quadrature did not converge (error estimate " +
                          format_double(r.abs_error_estimate) + ")");
}

QuadratureResult fou_autocovariance_unit(double hurst, double lag) {
  const double a = 2.0 * hurst - 1.0;
  const double c_h = hurst * a;
  const double tau = std::abs(lag);
  QuadratureResult lower = fou_detail::lower(tau, a);
  QuadratureResult upper = fou_detail::upper(tau, a);
  QuadratureResult out;
  out.value = 0.5 * c_h * (std::exp(-tau) * std::tgamma(a) + lower.value + upper.value);
  out.abs_error_estimate = 0.5 * c_h * (lower.abs_error_estimate + upper.abs_error_estimate);
  out.subdivisions = lower.subdivisions + upper.subdivisions;
  out.converged = lower.converged && upper.converged;
  return out;
}

QuadratureResult tempered_autocovariance(double theta, double alpha, double lag) {
  const double tau = std::abs(lag);
  if (tau == 0.0)
    return exact(std::tgamma(2.0 * alpha + 1.0) / std::pow(2.0 * theta, 2.0 * alpha + 1.0));
  const double cut = kTruncation / theta;
  auto smooth = [&](double z) { return std::exp(-2.0 * theta * z) * std::pow(z + tau, alpha); };
  QuadratureResult r = integrate_left_power(smooth, 0.0, cut, alpha + 1.0);
  // Tail beyond the cut: (z+tau)^{2 alpha} e^{-2 theta z} is decreasing there.
  const double slope = 2.0 * theta - 2.0 * alpha / (cut + tau);
  double tail = std::exp(-2.0 * theta * cut) * std::pow(cut + tau, 2.0 * alpha);
  tail = slope > 0.0 ? tail / slope : tail * cut;
  const double scale = std::exp(-theta * tau);
  r.value *= scale;
  r.abs_error_estimate = (r.abs_error_estimate + tail) * scale;
  return r;
}

double bridge_variance(double t) {
  const double k = std::floor(t);
  return (t - k) * (k + 1.0 - t);
}

}  // namespace

namespace fou_detail {

QuadratureResult lower(double c, double a) {
  if (c <= 0.0) return exact(0.0);
  if (c <= kSeriesLimit) {
    // e^{-c} Σ_k c^{k+a} / (k! (k+a)); positive terms, no cancellation.
    double term = std::pow(c, a);
    double sum = term / a;
    for (int k = 1; k < 1000; ++k) {
      term *= c / k;
      const double add = term / (k + a);
      sum += add;
      if (k > c && add < 1e-17 * sum) break;
    }
    return exact(std::exp(-c) * sum);
  }
  // x = c - y: ∫_0^c e^{-x} (c-x)^{a-1} dx, smooth on [0, 40] because c > 60.
  auto f = [&](double x) { return std::exp(-x) * std::pow(c - x, a - 1.0); };
  QuadratureResult r = integrate(f, 0.0, kTruncation);
  r.abs_error_estimate += std::exp(-kTruncation) * (1.0 / a + c);
  return r;
}

QuadratureResult upper(double c, double a) {
  if (c <= 0.0) return exact(std::tgamma(a));
  if (c < 1.0) {
    // e^{c} (Γ(a) - γ(a, c)); γ by its alternating series, |terms| decrease.
    double term = std::pow(c, a);
    double sum = term / a;
    for (int k = 1; k < 200; ++k) {
      term *= -c / k;
      const double add = term / (k + a);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return exact(std::exp(c) * (std::tgamma(a) - sum));
  }
  auto f = [&](double x) { return std::exp(-x) * std::pow(x + c, a - 1.0); };
  QuadratureResult r = integrate(f, 0.0, kTruncation);
  r.abs_error_estimate += std::exp(-kTruncation) * std::pow(c, a - 1.0);
  return r;
}

}  // namespace fou_detail

ProcessSpec ProcessSpec::fbm(double hurst) {
  ProcessSpec s;
  s.kind = ProcessKind::FBM;
  s.hurst = hurst;
  return s;
}

ProcessSpec ProcessSpec::periodic_bridge() {
  ProcessSpec s;
  s.kind = ProcessKind::PeriodicBridge;
  return s;
}

ProcessSpec ProcessSpec::stationary_ou(double theta) {
  ProcessSpec s;
  s.kind = ProcessKind::StationaryOU;
  s.theta = theta;
  return s;
}

ProcessSpec ProcessSpec::fractional_ou(double hurst, double theta) {
  ProcessSpec s;
  s.kind = ProcessKind::FractionalOU;
  s.hurst = hurst;
  s.theta = theta;
  return s;
}

ProcessSpec ProcessSpec::tempered(double theta, double alpha) {
  ProcessSpec s;
  s.kind = ProcessKind::TemperedStationary;
  s.theta = theta;
  s.alpha = alpha;
  return s;
}

ProcessSpec ProcessSpec::sawtooth(XiLaw law) {
  ProcessSpec s;
  s.kind = ProcessKind::RandomSawtooth;
  s.xi_law = law;
  return s;
}

void ProcessSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (kind) {
    case ProcessKind::FBM:
      if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidSpec("fbm: hurst must lie in (0,1)");
      break;
    case ProcessKind::FractionalOU:
      if (!(hurst > 0.5 && hurst < 1.0))
        throw InvalidSpec("fou: hurst must lie in (1/2,1) for the |u-v|^{2H-2} kernel");
      if (!positive(theta)) throw InvalidSpec("fou: theta must be positive");
      break;
    case ProcessKind::StationaryOU:
      if (!positive(theta)) throw InvalidSpec("ou: theta must be positive");
      break;
    case ProcessKind::TemperedStationary:
      if (!positive(theta)) throw InvalidSpec("tempered: theta must be positive");
      if (!positive(alpha)) throw InvalidSpec("tempered: alpha must be positive");
      break;
    case ProcessKind::PeriodicBridge:
    case ProcessKind::RandomSawtooth:
      break;
  }
}

bool ProcessSpec::is_stationary() const {
  return kind == ProcessKind::StationaryOU || kind == ProcessKind::FractionalOU ||
         kind == ProcessKind::TemperedStationary;
}

std::string ProcessSpec::describe() const {
  std::string out(to_string(kind));
  switch (kind) {
    case ProcessKind::FBM:
      out += "(hurst=" + format_double(hurst) + ")";
      break;
    case ProcessKind::FractionalOU:
      out += "(hurst=" + format_double(hurst) + ",theta=" + format_double(theta) + ")";
      break;
    case ProcessKind::StationaryOU:
      out += "(theta=" + format_double(theta) + ")";
      break;
    case ProcessKind::TemperedStationary:
      out += "(theta=" + format_double(theta) + ",alpha=" + format_double(alpha) + ")";
      break;
    case ProcessKind::RandomSawtooth:
      out += "(xi=" + std::string(to_string(xi_law)) + ")";
      break;
    case ProcessKind::PeriodicBridge:
      break;
  }
  return out;
}

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::FBM: return "fbm";
    case ProcessKind::PeriodicBridge: return "bridge";
    case ProcessKind::StationaryOU: return "ou";
    case ProcessKind::FractionalOU: return "fou";
    case ProcessKind::TemperedStationary: return "tempered";
    case ProcessKind::RandomSawtooth: return "sawtooth";
  }
  return "?";
}

std::string_view to_string(XiLaw law) {
  return law == XiLaw::ExpSmallBall ? "exp" : "rademacher";
}

ProcessKind parse_process_kind(std::string_view name) {
  if (name == "fbm") return ProcessKind::FBM;
  if (name == "bridge") return ProcessKind::PeriodicBridge;
  if (name == "ou") return ProcessKind::StationaryOU;
  if (name == "fou") return ProcessKind::FractionalOU;
  if (name == "tempered") return ProcessKind::TemperedStationary;
  if (name == "sawtooth") return ProcessKind::RandomSawtooth;
  throw InvalidSpec("unknown process kind '" + std::string(name) +
                    "' (expected fbm, bridge, ou, fou, tempered, sawtooth)");
}

XiLaw parse_xi_law(std::string_view name) {
  if (name == "exp") return XiLaw::ExpSmallBall;
  if (name == "rademacher") return XiLaw::Rademacher;
  throw InvalidSpec("unknown xi law '" + std::string(name) + "' (expected exp, rademacher)");
}

double sawtooth_profile(double t) {
  const double r = t - 2.0 * std::floor(t / 2.0);
  return r <= 1.0 ? r : 2.0 - r;
}

double exp_small_ball_normalizer() {
  static const double z = [] {
    auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / (x * x)) : 0.0; };
    return integrate(f, 0.0, 1.0).value;
  }();
  return z;
}

double xi_second_moment(XiLaw law) {
  if (law == XiLaw::Rademacher) return 1.0;
  static const double m2 = [] {
    auto f = [](double x) { return x > 0.0 ? x * x * std::exp(-1.0 / (x * x)) : 0.0; };
    return integrate(f, 0.0, 1.0).value / exp_small_ball_normalizer();
  }();
  return m2;
}

QuadratureResult stationary_autocovariance(const ProcessSpec& spec, double lag) {
  spec.validate();
  switch (spec.kind) {
    case ProcessKind::StationaryOU:
      return exact(std::exp(-spec.theta * std::abs(lag)) / (2.0 * spec.theta));
    case ProcessKind::FractionalOU: {
      QuadratureResult r = fou_autocovariance_unit(spec.hurst, spec.theta * lag);
      const double scale = std::pow(spec.theta, -2.0 * spec.hurst);
      r.value *= scale;
      r.abs_error_estimate *= scale;
      require_converged(r, "fou autocovariance");
      return r;
    }
    case ProcessKind::TemperedStationary: {
      QuadratureResult r = tempered_autocovariance(spec.theta, spec.alpha, lag);
      require_converged(r, "tempered autocovariance");
      return r;
    }
    default:
      throw PreconditionError("stationary_autocovariance: " + spec.describe() +
                              " is not stationary");
  }
}

KernelEval covariance(const ProcessSpec& spec, double s, double t) {
  spec.validate();
  if (!(s >= 0.0 && t >= 0.0)) throw PreconditionError("covariance: times must be >= 0");
  KernelEval out;
  switch (spec.kind) {
    case ProcessKind::FBM: {
      const double h2 = 2.0 * spec.hurst;
      const double d = std::pow(std::abs(t - s), h2);
      out.value = 0.5 * (std::pow(s, h2) + std::pow(t, h2) - d);
      out.variogram = d;
      break;
    }
    case ProcessKind::PeriodicBridge: {
      const double lo = std::min(s, t), hi = std::max(s, t);
      const double k = std::floor(lo);
      out.value = (std::floor(hi) == k) ? (lo - k) * (k + 1.0 - hi) : 0.0;
      out.variogram = bridge_variance(s) + bridge_variance(t) - 2.0 * out.value;
      break;
    }
    case ProcessKind::StationaryOU: {
      const double h = std::abs(t - s);
      out.value = std::exp(-spec.theta * h) / (2.0 * spec.theta);
      out.variogram = -std::expm1(-spec.theta * h) / spec.theta;
      break;
    }
    case ProcessKind::FractionalOU:
    case ProcessKind::TemperedStationary: {
      const QuadratureResult zero = stationary_autocovariance(spec, 0.0);
      const QuadratureResult lag = stationary_autocovariance(spec, t - s);
      out.value = lag.value;
      out.variogram = std::max(0.0, 2.0 * (zero.value - lag.value));
      out.quadrature_error = lag.abs_error_estimate + zero.abs_error_estimate;
      break;
    }
    case ProcessKind::RandomSawtooth: {
      const double m2 = xi_second_moment(spec.xi_law);
      const double ps = sawtooth_profile(s), pt = sawtooth_profile(t);
      out.value = m2 * ps * pt;
      out.variogram = m2 * (pt - ps) * (pt - ps);
      break;
    }
  }
  return out;
}

double variogram(const ProcessSpec& spec, double s, double t) {
  if (s > t) throw PreconditionError("variogram: requires s <= t");
  if (s == t) return 0.0;
  return covariance(spec, s, t).variogram;
}

QuadratureResult fou_variance_quadrature(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw PreconditionError("fou_variance: hurst must lie in (1/2,1)");
  const double a = 2.0 * hurst - 1.0;
  QuadratureOptions inner_opts;
  inner_opts.abs_tol = 1e-14;
  inner_opts.rel_tol = 1e-12;
  double inner_error = 0.0;
  bool inner_ok = true;
  // Split along the diagonal z = w; each half has its power singularity at
  // the shared endpoint, removed by the power substitution.
  auto inner = [&](double w) {
    QuadratureResult below = integrate_right_power(
        [](double z) { return std::exp(-z); }, 0.0, w, a, inner_opts);
    QuadratureResult above = integrate_left_power(
        [](double z) { return std::exp(-z); }, w, w + kTruncation, a, inner_opts);
    inner_error = std::max(inner_error, below.abs_error_estimate + above.abs_error_estimate);
    inner_ok = inner_ok && below.converged && above.converged;
    return std::exp(-w) * (below.value + above.value);
  };
  QuadratureOptions outer_opts;
  outer_opts.rel_tol = 1e-10;
  QuadratureResult r = integrate(inner, 0.0, kTruncation, outer_opts);
  const double c_h = hurst * a;
  r.value *= c_h;
  r.abs_error_estimate = c_h * (r.abs_error_estimate + inner_error +
                                2.0 * std::exp(-kTruncation) * std::tgamma(a));
  r.converged = r.converged && inner_ok;
  return r;
}

double fou_variance(double hurst) {
  const QuadratureResult r = fou_variance_quadrature(hurst);
  require_converged(r, "fou_variance");
  return r.value;
}

}  // namespace smallball
