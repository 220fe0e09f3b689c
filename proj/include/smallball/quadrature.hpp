#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace smallball {

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  int subdivisions = 0;
  bool converged = true;
};

struct QuadratureOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_subdivisions = 4000;
};

inline QuadratureResult& operator+=(QuadratureResult& a, const QuadratureResult& b) {
  a.value += b.value;
  a.abs_error_estimate += b.abs_error_estimate;
  a.subdivisions += b.subdivisions;
  a.converged = a.converged && b.converged;
  return a;
}

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
};

template <class F>
Segment gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G7/K15) on a finite interval. The error
/// estimate is |K15 - G7| summed over segments, which is pessimistic for
/// smooth integrands. Bisects the worst segment until
/// error <= max(abs_tol, rel_tol * |value|) or the subdivision budget runs out
/// (then `converged` is false; callers decide whether that is fatal).
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (a == b) return {};
  const double sign = (b < a) ? -1.0 : 1.0;
  if (b < a) std::swap(a, b);

  std::vector<detail::Segment> heap;
  heap.push_back(detail::gauss_kronrod_15(f, a, b));
  double value = heap.front().value;
  double error = heap.front().error;
  auto by_error = [](const detail::Segment& x, const detail::Segment& y) {
    return x.error < y.error;
  };
  int subdivisions = 1;
  while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value)) &&
         subdivisions < opts.max_subdivisions) {
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const detail::Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), by_error);
      break;  // interval no longer representable
    }
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
    ++subdivisions;
    // Re-sum rather than update incrementally to avoid drift.
    value = 0.0;
    error = 0.0;
    for (const auto& s : heap) {
      value += s.value;
      error += s.error;
    }
  }
  QuadratureResult out;
  out.value = sign * value;
  out.abs_error_estimate = error;
  out.subdivisions = subdivisions;
  out.converged = error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
  return out;
}

/// ∫_a^b g(x) (x - a)^(alpha - 1) dx for alpha > 0. The substitution
/// x = a + u^(1/alpha) turns the weight into the constant 1/alpha.
template <class G>
QuadratureResult integrate_left_power(G&& g, double a, double b, double alpha,
                                      const QuadratureOptions& opts = {}) {
  if (b <= a) return {};
  const double inv = 1.0 / alpha;
  const double upper = std::pow(b - a, alpha);
  auto h = [&](double u) { return inv * g(a + std::pow(u, inv)); };
  return integrate(h, 0.0, upper, opts);
}

/// ∫_a^b g(x) (b - x)^(alpha - 1) dx for alpha > 0.
template <class G>
QuadratureResult integrate_right_power(G&& g, double a, double b, double alpha,
                                       const QuadratureOptions& opts = {}) {
  if (b <= a) return {};
  const double inv = 1.0 / alpha;
  const double upper = std::pow(b - a, alpha);
  auto h = [&](double u) { return inv * g(b - std::pow(u, inv)); };
  return integrate(h, 0.0, upper, opts);
}

/// ∫_a^∞ f(z) dz through z = a - log(t), t ∈ (0, 1]; suited to integrands
/// with an exponential factor, which becomes polynomial in t.
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureOptions& opts = {}) {
  auto h = [&](double t) {
    const double z = a - std::log(t);
    const double v = f(z);
    return v == 0.0 ? 0.0 : v / t;
  };
  return integrate(h, 0.0, 1.0, opts);
}

}  // namespace smallball
