#include "smallball/testfuncs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"

namespace smallball {
namespace {

constexpr int kSmoothOrder = 64;

double horner(std::span<const double> c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::vector<double> differentiate(std::span<const double> c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

// Taylor coefficients of a polynomial about x, up to `order`.
std::vector<double> taylor(std::span<const double> c, double x, int order) {
  std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
  std::vector<double> d(c.begin(), c.end());
  double factorial = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) factorial *= k;
    out[static_cast<std::size_t>(k)] = horner(d, x) / factorial;
    d = differentiate(d);
  }
  return out;
}

// g(s) = s^3 sin(1/s) and its first derivative, both 0 at s = 0.
double cube_sin_inv(double s) { return s == 0.0 ? 0.0 : s * s * s * std::sin(1.0 / s); }
double cube_sin_inv_prime(double s) {
  return s == 0.0 ? 0.0 : 3.0 * s * s * std::sin(1.0 / s) - s * std::cos(1.0 / s);
}

// For every window of `width` consecutive samples, the max (or min) value.
template <class Better>
std::vector<double> sliding(std::span<const double> v, std::size_t width, Better better) {
  if (width == 0 || v.size() < width) return {};
  std::vector<double> out(v.size() - width + 1);
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < v.size(); ++i) {
    while (!q.empty() && !better(v[q.back()], v[i])) q.pop_back();
    q.push_back(i);
    if (q.front() + width <= i) q.pop_front();
    if (i + 1 >= width) out[i + 1 - width] = v[q.front()];
  }
  return out;
}

std::vector<double> sliding_max(std::span<const double> v, std::size_t width) {
  return sliding(v, width, [](double a, double b) { return a > b; });
}
std::vector<double> sliding_min(std::span<const double> v, std::size_t width) {
  return sliding(v, width, [](double a, double b) { return a < b; });
}

std::vector<double> split_numbers(std::string_view text) {
  if (text.empty()) return {};
  return io::parse_double_list(text);
}

}  // namespace

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Poly: return "poly";
    case FunctionKind::TrigCombo: return "trig";
    case FunctionKind::Rational: return "rational";
    case FunctionKind::X3SinInv: return "x3sininv";
    case FunctionKind::PeriodicSinCluster: return "sincluster";
    case FunctionKind::AbsPow: return "abspow";
    case FunctionKind::Custom: return "exp";
  }
  return "?";
}

FunctionSpec::FunctionSpec(FunctionKind kind, std::vector<double> coeffs)
    : kind_(kind), coeffs_(std::move(coeffs)) {}

FunctionSpec FunctionSpec::poly(std::vector<double> coeffs) {
  if (coeffs.empty()) throw InvalidSpec("poly: needs at least one coefficient");
  FunctionSpec f(FunctionKind::Poly, std::move(coeffs));
  std::size_t m = f.coeffs_.size() - 1;
  while (m > 0 && f.coeffs_[m] == 0.0) --m;
  const double lead = std::abs(f.coeffs_[m]);
  if (lead == 0.0) return f;
  if (m == 0) {
    f.a1 = A1Params{1.0, std::min(1.0, lead)};
    return f;
  }
  // Chebyshev: every window of width η has sup |f| >= 2 |c_m| (η/4)^m.
  const double c = 2.0 * lead * std::pow(0.25, static_cast<double>(m));
  f.a1 = A1Params{static_cast<double>(m) + 1.0, std::min(1.0, c)};
  return f;
}

FunctionSpec FunctionSpec::constant(double c) { return poly({c}); }

FunctionSpec FunctionSpec::trig(std::vector<double> quadruples) {
  if (quadruples.empty() || quadruples.size() % 4 != 0)
    throw InvalidSpec("trig: coefficients come in quadruples (a, alpha, b, beta)");
  FunctionSpec f(FunctionKind::TrigCombo, std::move(quadruples));
  // One common frequency ω: f = R sin(ωx + φ), so K(η) = R sin(ωη/2) >= Rωη/π
  // for η <= π/ω.
  const double omega = std::abs(f.coeffs_[1]);
  double sa = 0.0, sb = 0.0;
  bool common = omega > 0.0;
  for (std::size_t i = 0; i < f.coeffs_.size(); i += 4) {
    if (f.coeffs_[i] != 0.0 && f.coeffs_[i + 1] != f.coeffs_[1]) common = false;
    if (f.coeffs_[i + 2] != 0.0 && std::abs(f.coeffs_[i + 3]) != omega) common = false;
    sa += f.coeffs_[i];
    sb += f.coeffs_[i + 2];
  }
  const double r = std::hypot(sa, sb);
  if (common && r > 0.0) f.a1 = A1Params{2.0, std::min(std::numbers::pi / omega, r * omega / std::numbers::pi)};
  return f;
}

FunctionSpec FunctionSpec::rational(std::vector<double> numerator, std::vector<double> denominator) {
  if (numerator.empty() || denominator.empty()) throw InvalidSpec("rational: empty polynomial");
  std::size_t n = denominator.size() - 1;
  while (n > 0 && denominator[n] == 0.0) --n;
  if (denominator[n] == 0.0) throw InvalidSpec("rational: zero denominator");
  if (n > 0) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      companion(0, static_cast<Eigen::Index>(i)) = -denominator[n - 1 - i] / denominator[n];
      if (i + 1 < n) companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
    }
    const Eigen::VectorXcd roots = companion.eigenvalues();
    for (const auto& z : roots)
      if (std::abs(z.imag()) <= 1e-9 * (1.0 + std::abs(z.real())))
        throw InvalidSpec("rational: denominator has a real root near " + io::format_double(z.real()));
  }
  FunctionSpec f(FunctionKind::Rational, std::move(numerator));
  f.denominator_ = std::move(denominator);
  return f;
}

FunctionSpec FunctionSpec::x3_sin_inv() {
  FunctionSpec f(FunctionKind::X3SinInv, {});
  f.a1 = A1Params{4.0, 0.05};
  return f;
}

FunctionSpec FunctionSpec::periodic_sin_cluster() {
  FunctionSpec f(FunctionKind::PeriodicSinCluster, {});
  f.a1 = A1Params{4.0, 0.05};
  return f;
}

FunctionSpec FunctionSpec::abs_pow(double p) {
  if (!(p > 1.0)) throw InvalidSpec("abspow: exponent must exceed 1 for a C^1 function");
  FunctionSpec f(FunctionKind::AbsPow, {p});
  // K(η) = (η/2)^p >= η^{p+1} exactly when η <= 2^-p.
  f.a1 = A1Params{p + 1.0, std::pow(2.0, -p)};
  f.a1iii = A1iiiParams{1.0, p, 1.0};
  return f;
}

FunctionSpec FunctionSpec::exp_sum(std::vector<double> pairs) {
  if (pairs.empty() || pairs.size() % 2 != 0) throw InvalidSpec("exp: coefficients come in pairs (c, r)");
  return FunctionSpec(FunctionKind::Custom, std::move(pairs));
}

double FunctionSpec::value(double x) const { return derivative(x, 0); }

int FunctionSpec::max_derivative_order() const {
  switch (kind_) {
    case FunctionKind::X3SinInv:
    case FunctionKind::PeriodicSinCluster:
    case FunctionKind::AbsPow:
      return 1;
    default:
      return kSmoothOrder;
  }
}

double FunctionSpec::derivative(double x, int order) const {
  if (order < 0 || order > max_derivative_order())
    throw PreconditionError(std::string(to_string(kind_)) + ": derivative of order " +
                            std::to_string(order) + " not available");
  switch (kind_) {
    case FunctionKind::Poly: {
      std::vector<double> c(coeffs_);
      for (int k = 0; k < order; ++k) c = differentiate(c);
      return horner(c, x);
    }
    case FunctionKind::TrigCombo: {
      const double shift = order * std::numbers::pi / 2.0;
      double v = 0.0;
      for (std::size_t i = 0; i < coeffs_.size(); i += 4) {
        const double a = coeffs_[i], alpha = coeffs_[i + 1], b = coeffs_[i + 2], beta = coeffs_[i + 3];
        v += a * std::pow(alpha, order) * std::sin(alpha * x + shift);
        v += b * std::pow(beta, order) * std::cos(beta * x + shift);
      }
      return v;
    }
    case FunctionKind::Rational: {
      // Series division of the Taylor expansions about x.
      const auto p = taylor(coeffs_, x, order);
      const auto q = taylor(denominator_, x, order);
      if (q[0] == 0.0) throw PreconditionError("rational: denominator vanishes at " + io::format_double(x));
      std::vector<double> r(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) {
        double acc = p[k];
        for (std::size_t i = 1; i <= k; ++i) acc -= q[i] * r[k - i];
        r[k] = acc / q[0];
      }
      return std::tgamma(order + 1.0) * r.back();
    }
    case FunctionKind::X3SinInv:
      return order == 0 ? cube_sin_inv(x) : cube_sin_inv_prime(x);
    case FunctionKind::PeriodicSinCluster: {
      const double s = std::sin(x);
      return order == 0 ? cube_sin_inv(s) : cube_sin_inv_prime(s) * std::cos(x);
    }
    case FunctionKind::AbsPow: {
      const double p = coeffs_[0];
      if (order == 0) return std::pow(std::abs(x), p);
      return x == 0.0 ? 0.0 : std::copysign(p * std::pow(std::abs(x), p - 1.0), x);
    }
    case FunctionKind::Custom: {
      double v = 0.0;
      for (std::size_t i = 0; i < coeffs_.size(); i += 2)
        v += coeffs_[i] * std::pow(coeffs_[i + 1], order) * std::exp(coeffs_[i + 1] * x);
      return v;
    }
  }
  return 0.0;
}

std::optional<double> FunctionSpec::period() const {
  if (kind_ == FunctionKind::PeriodicSinCluster) return std::numbers::pi;
  if (kind_ == FunctionKind::TrigCombo) {
    const double omega = std::abs(coeffs_[1]);
    for (std::size_t i = 0; i < coeffs_.size(); i += 4) {
      const bool sin_ok = coeffs_[i] == 0.0 || std::abs(coeffs_[i + 1]) == omega;
      const bool cos_ok = coeffs_[i + 2] == 0.0 || std::abs(coeffs_[i + 3]) == omega;
      if (!sin_ok || !cos_ok) return std::nullopt;
    }
    if (omega > 0.0) return 2.0 * std::numbers::pi / omega;
  }
  return std::nullopt;
}

std::optional<double> FunctionSpec::growth_constant() const {
  switch (kind_) {
    case FunctionKind::Poly: {
      double sum = 0.0;
      for (std::size_t k = 1; k < coeffs_.size(); ++k) sum += static_cast<double>(k) * std::abs(coeffs_[k]);
      const double degree = static_cast<double>(coeffs_.size() - 1);
      return std::max({sum, degree - 1.0, 1.0});
    }
    case FunctionKind::TrigCombo: {
      double sum = 0.0;
      for (std::size_t i = 0; i < coeffs_.size(); i += 4)
        sum += std::abs(coeffs_[i] * coeffs_[i + 1]) + std::abs(coeffs_[i + 2] * coeffs_[i + 3]);
      return std::max(1.0, sum);
    }
    case FunctionKind::Rational: {
      // Heuristic: growth degree m - n, scale from the coefficients; the
      // derivative bound itself is always verified numerically.
      double scale = 1.0;
      for (double c : coeffs_) scale += std::abs(c);
      for (double c : denominator_) scale += std::abs(c);
      const double growth = static_cast<double>(coeffs_.size()) - static_cast<double>(denominator_.size());
      return std::max(scale, growth);
    }
    case FunctionKind::X3SinInv: return 3.0;
    case FunctionKind::PeriodicSinCluster: return 4.0;
    case FunctionKind::AbsPow: return std::max(coeffs_[0], 1.0);
    case FunctionKind::Custom: {
      for (std::size_t i = 0; i < coeffs_.size(); i += 2)
        if (coeffs_[i] != 0.0 && coeffs_[i + 1] != 0.0) return std::nullopt;
      return 1.0;
    }
  }
  return std::nullopt;
}

std::string FunctionSpec::describe() const {
  std::string out(to_string(kind_));
  switch (kind_) {
    case FunctionKind::X3SinInv:
    case FunctionKind::PeriodicSinCluster:
      return out;
    case FunctionKind::Rational:
      return out + ":" + io::join_doubles(coeffs_) + "|" + io::join_doubles(denominator_);
    default:
      return out + ":" + io::join_doubles(coeffs_);
  }
}

FunctionSpec parse_function(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  try {
    if (name == "poly") return FunctionSpec::poly(split_numbers(args));
    if (name == "const") {
      const auto v = split_numbers(args);
      if (v.size() != 1) throw InvalidSpec("const: expects one value");
      return FunctionSpec::constant(v[0]);
    }
    if (name == "trig") return FunctionSpec::trig(split_numbers(args));
    if (name == "rational") {
      const std::size_t bar = args.find('|');
      if (bar == std::string_view::npos) throw InvalidSpec("rational: expected 'numerator|denominator'");
      return FunctionSpec::rational(split_numbers(args.substr(0, bar)), split_numbers(args.substr(bar + 1)));
    }
    if (name == "x3sininv") return FunctionSpec::x3_sin_inv();
    if (name == "sincluster") return FunctionSpec::periodic_sin_cluster();
    if (name == "abspow") {
      const auto v = split_numbers(args);
      if (v.size() != 1) throw InvalidSpec("abspow: expects one exponent");
      return FunctionSpec::abs_pow(v[0]);
    }
    if (name == "exp") return FunctionSpec::exp_sum(split_numbers(args));
  } catch (const std::invalid_argument& e) {
    throw InvalidSpec("function '" + std::string(text) + "': " + e.what());
  }
  throw InvalidSpec("unknown function kind '" + std::string(name) +
                    "' (expected poly, const, trig, rational, x3sininv, sincluster, abspow, exp)");
}

Interval default_range(const FunctionSpec& f) {
  if (auto p = f.period()) return {0.0, *p};
  switch (f.kind()) {
    case FunctionKind::X3SinInv: return {-1.0, 1.0};
    case FunctionKind::TrigCombo: return {-20.0, 20.0};
    default: return {-4.0, 4.0};
  }
}

WindowInf lower_envelope_k(const FunctionSpec& f, double eta, Interval range, const GridOptions& grid) {
  if (!(eta > 0.0)) throw PreconditionError("K(eta): eta must be positive");
  if (!(range.hi >= range.lo)) throw PreconditionError("K(eta): empty range");
  std::size_t ny = grid.window_points;
  std::optional<WindowInf> previous;
  for (int level = 0; level <= grid.max_doublings; ++level, ny *= 2) {
    const double h = eta / static_cast<double>(ny);
    // Windows [x, x+η] and [x-η, x] for x in range: all windows inside
    // [lo-η, hi+η].
    const double lo = range.lo - eta;
    const auto n = static_cast<std::size_t>(std::ceil((range.hi - range.lo + 2.0 * eta) / h)) + 1;
    if (n > grid.max_grid_points) {
      if (previous) return *previous;
      throw GridTooCoarse("K(eta): grid of " + std::to_string(n) + " points exceeds the cap");
    }
    std::vector<double> absf(n);
    for (std::size_t i = 0; i < n; ++i) absf[i] = std::abs(f.value(lo + static_cast<double>(i) * h));
    const auto sups = sliding_max(absf, ny + 1);
    const auto best = std::min_element(sups.begin(), sups.end());
    WindowInf cur;
    cur.value = *best;
    cur.witness = lo + static_cast<double>(best - sups.begin()) * h;
    cur.step = h;

    // A posteriori resolution check: the sup over a window moves by at most
    // L*h under a sub-grid shift, L the local derivative bound.
    double local_slope = 0.0;
    for (std::size_t i = 0; i <= ny; ++i)
      local_slope = std::max(local_slope, std::abs(f.derivative(cur.witness + static_cast<double>(i) * h, 1)));
    const bool resolved = local_slope * h <= 0.1 * cur.value;
    const bool settled =
        previous && std::abs(cur.value - previous->value) <= grid.tolerance * std::max(cur.value, 1e-300);
    if (resolved && settled) {
      cur.converged = true;
      return cur;
    }
    if (level == grid.max_doublings) {
      if (resolved) return cur;
      throw GridTooCoarse("K(eta=" + io::format_double(eta) + "): local slope " +
                          io::format_double(local_slope) + " times step " + io::format_double(h) +
                          " exceeds 10% of the estimate " + io::format_double(cur.value));
    }
    previous = cur;
  }
  return *previous;
}

A1Report check_a1i(const FunctionSpec& f, double k, double eta_star, Interval range,
                   std::span<const double> eta_grid, const GridOptions& grid) {
  if (!(k > 0.0 && eta_star > 0.0)) throw PreconditionError("check_a1i: K and eta* must be positive");
  A1Report report;
  report.k = k;
  report.eta_star = eta_star;
  if (eta_grid.empty()) {
    const double lo = eta_star / 16.0, hi = 15.0 * eta_star / 16.0;
    for (int i = 0; i < 8; ++i) report.eta_grid.push_back(lo * std::pow(hi / lo, i / 7.0));
  } else {
    report.eta_grid.assign(eta_grid.begin(), eta_grid.end());
  }
  report.passes = true;
  double worst = std::numeric_limits<double>::infinity();
  for (double eta : report.eta_grid) {
    if (!(eta > 0.0 && eta < eta_star)) throw PreconditionError("check_a1i: eta grid must lie in (0, eta*)");
    const WindowInf w = lower_envelope_k(f, eta, range, grid);
    report.k_of_eta.push_back(w.value);
    const double margin = w.value / std::pow(eta, k);
    if (margin < worst) {
      worst = margin;
      report.witness_x = w.witness;
    }
    if (w.value < std::pow(eta, k)) report.passes = false;
  }
  return report;
}

Lemma1Report check_lemma1_equivalences(const FunctionSpec& f, double eta, Interval range,
                                       std::size_t window_points) {
  if (!(eta > 0.0)) throw PreconditionError("lemma1: eta must be positive");
  if (window_points < 4 || window_points % 2 != 0)
    throw PreconditionError("lemma1: window_points must be even and >= 4");
  const double h = eta / static_cast<double>(window_points);
  const double lo = range.lo - eta;
  const auto n = static_cast<std::size_t>(std::ceil((range.hi - range.lo + 2.0 * eta) / h)) + 1;
  if (n > (std::size_t{1} << 24)) throw GridTooCoarse("lemma1: grid too large");
  std::vector<double> absf(n);
  for (std::size_t i = 0; i < n; ++i) absf[i] = std::abs(f.value(lo + static_cast<double>(i) * h));
  Lemma1Report r;
  r.eta = eta;
  const auto half = sliding_max(absf, window_points / 2 + 1);
  // Open window (x, x+η): the window_points - 1 interior samples.
  const auto open = sliding_max(absf, window_points - 1);
  r.k_half = *std::min_element(half.begin(), half.end());
  r.k2 = *std::min_element(open.begin(), open.end());
  r.holds = r.k2 >= r.k_half;
  return r;
}

Ineq5Report check_ineq5(const FunctionSpec& f, int d, double eta0, double delta, Interval range,
                        std::size_t window_points) {
  if (d < 0 || d > f.max_derivative_order())
    throw PreconditionError("check_ineq5: f lacks " + std::to_string(d) + " derivatives");
  if (!(eta0 > 0.0 && delta > 0.0)) throw PreconditionError("check_ineq5: eta0 and delta must be positive");
  const double h = eta0 / static_cast<double>(window_points);
  const auto n = static_cast<std::size_t>(std::ceil((range.hi - range.lo + eta0) / h)) + 1;
  if (n > (std::size_t{1} << 24)) throw GridTooCoarse("check_ineq5: grid too large");
  std::vector<double> best;
  std::vector<double> absd(n);
  for (int order = 0; order <= d; ++order) {
    for (std::size_t i = 0; i < n; ++i)
      absd[i] = std::abs(f.derivative(range.lo + static_cast<double>(i) * h, order));
    const auto inf = sliding_min(absd, window_points + 1);
    if (best.empty()) best = inf;
    else
      for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], inf[i]);
  }
  Ineq5Report r;
  const auto it = std::min_element(best.begin(), best.end());
  r.value = *it;
  r.witness = range.lo + static_cast<double>(it - best.begin()) * h;
  r.holds = r.value >= delta;
  if (r.holds) {
    // Constructive constants: η* = η0 / 4^d, K = d, C = δ / 2^d, then the
    // constant is absorbed into one more power of η when C < 1.
    double k = d;
    double eta_star = eta0 / std::pow(4.0, d);
    const double c = delta / std::pow(2.0, d);
    if (c < 1.0) {
      k += 1.0;
      eta_star = std::min(eta_star, c);
    }
    r.k = k;
    r.eta_star = eta_star;
    r.constructive = check_a1i(f, std::max(k, 1e-12), eta_star, range);
  }
  return r;
}

bool check_a1iii(const FunctionSpec& f, double q, double p, double c, Interval range, std::size_t points) {
  if (points < 2) throw PreconditionError("check_a1iii: need at least two points");
  if (!(range.lo < -c || range.hi > c)) throw PreconditionError("check_a1iii: range must extend beyond +-C");
  const double h = (range.hi - range.lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = range.lo + static_cast<double>(i) * h;
    if (std::abs(x) < c) continue;
    // Relative slack absorbs rounding when the bound holds with equality.
    if (std::abs(f.value(x)) < q * std::pow(std::abs(x), p) * (1.0 - 1e-12)) return false;
  }
  return true;
}

bool check_a1ii(const FunctionSpec& f, double c0, Interval range, std::size_t points) {
  if (points < 2) throw PreconditionError("check_a1ii: need at least two points");
  const double h = (range.hi - range.lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = range.lo + static_cast<double>(i) * h;
    const double limit = c0 * std::pow(1.0 + std::abs(x), c0);
    if (std::abs(f.derivative(x, 1)) > limit * (1.0 + 1e-12)) return false;
  }
  return true;
}

}  // namespace smallball
