#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smallball/kernels.hpp"
#include "smallball/parallel.hpp"
#include "smallball/quadrature.hpp"

namespace smallball {

/// How the increment covariances enter the derivation of the bound.
enum class Correlation { Positive, BridgeNegative, OUNegative };

/// Relaxed: bound valid for Δ < Δ*, η < K3 Δ^γ (and η < η* when set).
/// Rectangle: bound valid on the full rectangle Δ < Δ*, η < η*.
enum class SmallBallRegime { Relaxed, Rectangle };

struct SmallBallParams {
  SmallBallRegime regime = SmallBallRegime::Relaxed;
  double delta_star = 0.0;
  std::optional<double> eta_star;
  std::optional<double> gamma;  // Relaxed only
  double lambda = 0.0;
  double mu = 0.0;
  double k1 = 1.0;
  double k2 = 0.0;
  std::optional<double> k3;  // Relaxed only

  bool admissible(double eta, double delta) const;
  /// Empty when admissible; otherwise names the violated condition.
  std::string inadmissibility(double eta, double delta) const;
  /// K1 exp(-K2 η^-λ Δ^μ), regardless of admissibility.
  double bound(double eta, double delta) const;
};

/// Constants of the small-ball bound for a process whose variogram obeys
/// c1 |t-s|^{2H} <= E(X_t - X_s)^2 <= c2 |t-s|^{2H} for |t-s| <= c3.
SmallBallParams derive_params(double c1, double c2, double c3, double hurst,
                              Correlation correlation);

/// Rectangle-regime parameters of the sawtooth with the ExpSmallBall law:
/// P[sup|X_t - X_s| <= η] = P[|ξ| <= 2η/Δ] <= Z^-1 exp(-(Δ/(2η))^2).
SmallBallParams sawtooth_params();

/// Parameters used for a process in experiments, or empty when no bound is
/// available (fractional OU, tempered, Rademacher sawtooth, FBM with H <= 1/2).
std::optional<SmallBallParams> default_params(const ProcessSpec& spec);

/// exp(-η^4 / (16 a^2 S)) when a * var_sum >= 32 η^2, empty otherwise.
std::optional<double> li_shao_bound(double a, double eta, double cov_sq_sum, double var_sum);

struct IncrementSums {
  double var_sum = 0.0;     // Σ_i E ξ_i^2
  double cov_sq_sum = 0.0;  // Σ_{i,j} (E ξ_i ξ_j)^2
  std::size_t count = 0;    // number of ξ_i
  double quadrature_error = 0.0;
};

/// ξ_i = X_{s+iaΔ} - X_{s+(i-1)aΔ} for i = 2..floor(1/a).
IncrementSums increment_cov_sum(const ProcessSpec& spec, double a, double delta, double s = 0.0);

struct FouCrossTerms {
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
  double total = 0.0;  // i1 + 2 i2 + i3 = E ξ_i ξ_j
  bool positive = false;
  double quadrature_error = 0.0;
};

/// Decomposition of E ξ_i ξ_j for the fractional OU process (theta = 1) into
/// the damping term I1 (prefactor (e^{-aΔ}-1)^2), the mixed term I2 and the
/// local term I3 (order (aΔ)^{2H}).
FouCrossTerms fou_cross_terms(double hurst, double a, double delta, std::size_t i, std::size_t j);

struct SmallBallResult {
  double s = 0.0;
  double delta = 0.0;
  double eta = 0.0;
  double dt = 0.0;
  std::size_t replicates = 0;
  double p_hat = 0.0;  // grid step dt
  double half_width = 0.0;
  double p_hat_refined = 0.0;  // grid step dt/2
  double half_width_refined = 0.0;
  bool refinement_stable = true;  // |p_hat - p_hat_refined| <= half_width
  std::optional<double> analytic_bound;
  bool admissible = false;
  std::string note;  // inadmissibility reason, if any
};

struct SmallBallOptions {
  std::size_t replicates = 10000;
  double dt = 0.0;  // 0: delta / 64
  std::uint64_t seed = 0;
  Exec exec = Exec::Parallel;
  std::optional<SmallBallParams> params;  // empty: default_params(spec)
};

/// Empirical P[max over grid of |X_t - X_s| <= η for t in [s, s+Δ]] for
/// several η at once; the replicates are shared across η.
std::vector<SmallBallResult> small_ball_sweep(const ProcessSpec& spec, double s, double delta,
                                              std::span<const double> etas,
                                              const SmallBallOptions& opts);

SmallBallResult empirical_small_ball(const ProcessSpec& spec, double s, double delta, double eta,
                                     const SmallBallOptions& opts);

/// ∫_0^1∫_0^1 |t2 - t1|^κ dt1 dt2 with κ = rρ - rβ - 2; empty when κ <= -1.
std::optional<double> grr_m(double r, double rho, double beta);

struct HolderTailResult {
  double tail = 0.0;  // P[sup |X_t2 - X_t1| / |t2 - t1|^β >= h]
  double half_width = 0.0;
  double moment_constant = 0.0;   // max over lags of E|ΔX|^r / lag^{rρ}
  std::optional<double> grr_m;    // empty when infinite
  std::optional<double> reference;  // moment_constant * M / h^r
};

struct HolderTailOptions {
  double r = 8.0;
  double rho = 0.5;
  double window = 1.0;
  double s = 0.0;
  double dt = 1.0 / 64.0;
  std::size_t replicates = 10000;
  std::uint64_t seed = 0;
  Exec exec = Exec::Parallel;
};

HolderTailResult empirical_holder_tail(const ProcessSpec& spec, double beta, double h,
                                       const HolderTailOptions& opts);

}  // namespace smallball
