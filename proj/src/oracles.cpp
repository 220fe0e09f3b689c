#include "smallball/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"

namespace smallball::oracles {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos{
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

void require_hurst(double hurst, const char* who) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw PreconditionError(std::string(who) + ": hurst must lie in (1/2, 1), got " + io::format_double(hurst));
}

// Keeps the largest inner error seen; the outer weight integrates to <= 1.
struct InnerErrors {
  double worst = 0.0;
  bool ok = true;
  double operator()(const QuadratureResult& r) {
    worst = std::max(worst, r.abs_error_estimate);
    ok = ok && r.converged;
    return r.value;
  }
};

QuadratureResult finish(QuadratureResult outer, const InnerErrors& inner, double inner_scale, const char* who) {
  outer.abs_error_estimate += inner_scale * inner.worst;
  outer.converged = outer.converged && inner.ok;
  if (!outer.converged) throw QuadratureError(std::string(who) + ": quadrature did not converge");
  return outer;
}

// ∫_0^∞ e^{-z} (z + d)^{a-1} dz for d >= 0.
QuadratureResult shifted_gamma(double a, double d) {
  auto tail = [&](double z) { return std::exp(-z) * std::pow(z + d, a - 1.0); };
  if (d >= 1.0) return integrate_to_infinity(tail, 0.0);
  auto g = [&](double y) { return std::exp(d - y); };
  QuadratureResult r = integrate_left_power(g, 0.0, 1.0 + d, a);
  const QuadratureResult head = integrate_left_power(g, 0.0, d, a);
  r.value -= head.value;
  r.abs_error_estimate += head.abs_error_estimate;
  r.converged = r.converged && head.converged;
  r += integrate_to_infinity(tail, 1.0);
  return r;
}

}  // namespace

double gamma_function(double z) {
  if (!(z > 0.0)) throw PreconditionError("gamma_function: z must be positive");
  if (z < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * z) * gamma_function(1.0 - z));
  const double x = z - 1.0;
  double sum = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) sum += kLanczos[i] / (x + static_cast<double>(i));
  const double t = x + kLanczosG + 0.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * sum;
}

QuadratureResult gamma_quadrature(double a) {
  if (!(a > 0.0)) throw PreconditionError("gamma_quadrature: a must be positive");
  QuadratureResult r = integrate_left_power([](double y) { return std::exp(-y); }, 0.0, 1.0, a);
  r += integrate_to_infinity([&](double y) { return std::exp(-y) * std::pow(y, a - 1.0); }, 1.0);
  if (!r.converged) throw QuadratureError("gamma_quadrature: quadrature did not converge");
  return r;
}

LemmaA1 lemma_a1_integral(double hurst, double x, double y) {
  require_hurst(hurst, "lemma_a1_integral");
  if (!(x >= 0.0 && y >= 0.0)) throw PreconditionError("lemma_a1_integral: x and y must be non-negative");
  const double a = 2.0 * hurst - 1.0;
  LemmaA1 out;
  out.bound = 2.0 * std::pow(x, a) / a;
  if (x == 0.0) {
    out.within_bound = true;
    return out;
  }
  auto one = [](double) { return 1.0; };
  if (y <= x) {
    out.closed_form = (std::pow(y, a) + std::pow(x - y, a)) / a;
    out.quadrature = integrate_right_power(one, 0.0, y, a);
    out.quadrature += integrate_left_power(one, y, x, a);
  } else {
    out.closed_form = (std::pow(y, a) - std::pow(y - x, a)) / a;
    out.quadrature = integrate([&](double w) { return std::pow(y - w, a - 1.0); }, 0.0, x);
  }
  if (!out.quadrature.converged) throw QuadratureError("lemma_a1_integral: quadrature did not converge");
  out.within_bound = out.closed_form <= out.bound * (1.0 + 1e-12);
  return out;
}

QuadratureResult lemma_a2_i5(double hurst, double p) {
  require_hurst(hurst, "lemma_a2_i5");
  if (!(p >= 0.0)) throw PreconditionError("lemma_a2_i5: p must be non-negative");
  const double a = 2.0 * hurst - 1.0;
  const QuadratureResult gamma_a = gamma_quadrature(a);
  InnerErrors inner;
  // F(w) = ∫_0^∞ e^{-z} |z - c|^{a-1} dz with c = w - p.
  auto f = [&](double w) {
    const double c = w - p;
    if (c > 0.0) {
      QuadratureResult left = integrate_right_power([](double z) { return std::exp(-z); }, 0.0, c, a);
      left.value += std::exp(-c) * gamma_a.value;
      left.abs_error_estimate += std::exp(-c) * gamma_a.abs_error_estimate;
      return std::exp(-w) * inner(left);
    }
    return std::exp(-w) * inner(shifted_gamma(a, -c));
  };
  QuadratureResult outer = integrate(f, 0.0, p);
  outer += integrate_to_infinity(f, p);
  return finish(outer, inner, 1.0, "lemma_a2_i5");
}

QuadratureResult lemma_a3_ratio(double hurst, double x) {
  require_hurst(hurst, "lemma_a3_ratio");
  if (!(x > 0.0)) throw PreconditionError("lemma_a3_ratio: x must be positive");
  const double a = 2.0 * hurst - 1.0;
  const QuadratureResult gamma_a = gamma_quadrature(a);
  InnerErrors inner;
  // e^v J(v), J(v) = ∫_0^∞ e^{-u} |u - v|^{a-1} du split at u = v.
  auto f = [&](double v) {
    QuadratureResult below = integrate_right_power([&](double u) { return std::exp(v - u); }, 0.0, v, a);
    return inner(below) + gamma_a.value;
  };
  QuadratureOptions opts;
  opts.rel_tol = 1e-13;
  QuadratureResult r = integrate(f, 0.0, x, opts);
  r.abs_error_estimate += x * gamma_a.abs_error_estimate;
  r = finish(r, inner, x * std::exp(x), "lemma_a3_ratio");
  r.value /= x;
  r.abs_error_estimate /= x;
  return r;
}

double lemma_a3_series(double hurst, double x) {
  require_hurst(hurst, "lemma_a3_series");
  if (!(x > 0.0)) throw PreconditionError("lemma_a3_series: x must be positive");
  const double a = 2.0 * hurst - 1.0;
  double sum = gamma_function(a);
  double power = std::pow(x, a);  // x^{k+a} / k!
  for (int k = 0; k < 200; ++k) {
    const double term = power / ((k + a) * (k + a + 1.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    power *= x / (k + 1.0);
  }
  return sum;
}

namespace {

// Fits g(x) = L + Σ_j c_j x^{a+j} through the points and returns L.
double extrapolate(std::span<const double> xs, std::span<const double> g, double a) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < n; ++j) m(i, j) = std::pow(xs[i], a + static_cast<double>(j - 1));
    rhs(i) = g[i];
  }
  return m.colPivHouseholderQr().solve(rhs)(0);
}

}  // namespace

LemmaA3Limit lemma_a3_limit(double hurst, double x0, int levels) {
  require_hurst(hurst, "lemma_a3_limit");
  if (!(x0 > 0.0) || levels < 2) throw PreconditionError("lemma_a3_limit: need x0 > 0 and levels >= 2");
  const double a = 2.0 * hurst - 1.0;
  LemmaA3Limit out;
  out.reference = gamma_function(a);
  for (int k = 0; k < levels; ++k) {
    out.xs.push_back(std::ldexp(x0, -k));
    out.ratios.push_back(lemma_a3_ratio(hurst, out.xs.back()).value);
  }
  out.limit = extrapolate(out.xs, out.ratios, a);
  const double coarser = extrapolate(std::span(out.xs).first(out.xs.size() - 1),
                                     std::span(out.ratios).first(out.ratios.size() - 1), a);
  out.error_estimate = std::abs(out.limit - coarser);
  return out;
}

}  // namespace smallball::oracles
