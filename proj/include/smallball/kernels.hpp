#pragma once

#include <string>
#include <string_view>

#include "smallball/quadrature.hpp"

namespace smallball {

enum class ProcessKind {
  FBM,
  PeriodicBridge,
  StationaryOU,
  FractionalOU,
  TemperedStationary,
  RandomSawtooth,
};

/// Law of the random amplitude of the sawtooth process.
///  - ExpSmallBall: symmetric, density ∝ exp(-x^-2) on 0 < |x| <= 1, so
///    P[|ξ| <= x] <= K3 exp(-x^-2) (exponentially small mass at zero).
///  - Rademacher: ξ = ±1.
enum class XiLaw { ExpSmallBall, Rademacher };

struct ProcessSpec {
  ProcessKind kind = ProcessKind::StationaryOU;
  double hurst = 0.5;  // FBM, FractionalOU
  double theta = 1.0;  // StationaryOU, FractionalOU, TemperedStationary
  double alpha = 0.5;  // TemperedStationary
  XiLaw xi_law = XiLaw::ExpSmallBall;

  static ProcessSpec fbm(double hurst);
  static ProcessSpec periodic_bridge();
  static ProcessSpec stationary_ou(double theta = 1.0);
  static ProcessSpec fractional_ou(double hurst, double theta = 1.0);
  static ProcessSpec tempered(double theta, double alpha);
  static ProcessSpec sawtooth(XiLaw law = XiLaw::ExpSmallBall);

  /// Throws InvalidSpec when parameters are outside their domain.
  void validate() const;
  bool is_stationary() const;
  /// Stable text form, e.g. "fou(hurst=0.7,theta=1)".
  std::string describe() const;
};

std::string_view to_string(ProcessKind kind);
std::string_view to_string(XiLaw law);
/// Accepts "fbm", "bridge", "ou", "fou", "tempered", "sawtooth".
ProcessKind parse_process_kind(std::string_view name);
XiLaw parse_xi_law(std::string_view name);

struct KernelEval {
  double value = 0.0;            // E X_s X_t
  double variogram = 0.0;        // E (X_t - X_s)^2
  double quadrature_error = 0.0;  // 0 for closed forms
};

KernelEval covariance(const ProcessSpec& spec, double s, double t);

/// E (X_t - X_s)^2 for 0 <= s <= t.
double variogram(const ProcessSpec& spec, double s, double t);

/// Autocovariance r(lag) of a stationary spec, with its quadrature error.
QuadratureResult stationary_autocovariance(const ProcessSpec& spec, double lag);

/// Stationary variance of the fractional OU process with theta = 1,
/// C_H * ∫∫_{R+^2} e^{-z-w} |z-w|^{2H-2} dz dw, by nested quadrature.
/// Precondition: hurst in (1/2, 1).
double fou_variance(double hurst);
QuadratureResult fou_variance_quadrature(double hurst);

/// Triangle wave with period 2: t on [0,1], 2-t on [1,2].
double sawtooth_profile(double t);

/// E ξ² for the sawtooth amplitude law.
double xi_second_moment(XiLaw law);

/// Normaliser Z = ∫_0^1 exp(-x^-2) dx of the ExpSmallBall density.
double exp_small_ball_normalizer();

namespace fou_detail {
// Building blocks of the fOU autocovariance with theta = 1 and a = 2H - 1:
//   lower(c, a) = ∫_0^c e^{-(c-y)} y^{a-1} dy
//   upper(c, a) = ∫_c^∞ e^{-(y-c)} y^{a-1} dy
QuadratureResult lower(double c, double a);
QuadratureResult upper(double c, double a);
}  // namespace fou_detail

}  // namespace smallball
