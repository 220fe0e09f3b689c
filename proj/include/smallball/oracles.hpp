#pragma once

#include <span>
#include <vector>

#include "smallball/quadrature.hpp"

namespace smallball::oracles {

/// Γ(z) for z > 0 by the Lanczos approximation (g = 7, 9 terms).
double gamma_function(double z);

/// ∫_0^∞ e^{-y} y^{a-1} dy by quadrature alone; independent of gamma_function.
QuadratureResult gamma_quadrature(double a);

struct LemmaA1 {
  double closed_form = 0.0;
  QuadratureResult quadrature;
  double bound = 0.0;  // 2 x^a / a with a = 2H - 1
  bool within_bound = false;
};

/// ∫_0^x |w - y|^{2H-2} dw for H in (1/2, 1), x, y >= 0.
LemmaA1 lemma_a1_integral(double hurst, double x, double y);

/// I(p) = ∫_0^∞∫_0^∞ e^{-z-w} |z - w + p|^{2H-2} dz dw for p >= 0; p = 0 is
/// the symmetric integral, which equals Γ(2H - 1).
QuadratureResult lemma_a2_i5(double hurst, double p);

/// x^{-1} ∫_0^∞∫_0^x e^{-u+v} |u - v|^{2H-2} dv du by nested quadrature.
QuadratureResult lemma_a3_ratio(double hurst, double x);

/// The same ratio from its power series in x; converges for every x > 0.
double lemma_a3_series(double hurst, double x);

struct LemmaA3Limit {
  std::vector<double> xs;
  std::vector<double> ratios;
  double limit = 0.0;  // Richardson extrapolation to x -> 0
  double error_estimate = 0.0;
  double reference = 0.0;  // Γ(2H - 1)
};

/// Richardson extrapolation along x_k = x0 2^{-k}, eliminating the
/// x^{a}, x^{a+1}, ... terms (a = 2H - 1) of the small-x expansion.
LemmaA3Limit lemma_a3_limit(double hurst, double x0 = 0.1, int levels = 5);

}  // namespace smallball::oracles
