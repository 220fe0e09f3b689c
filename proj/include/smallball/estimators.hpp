#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "smallball/kernels.hpp"
#include "smallball/parallel.hpp"
#include "smallball/simulate.hpp"
#include "smallball/testfuncs.hpp"

namespace smallball {

/// g(s) = base + amplitude * sin(frequency * s). The identically zero
/// diffusion (base = amplitude = 0) is accepted as the noise-free model.
struct Diffusion {
  double base = 1.0;
  double amplitude = 0.0;
  double frequency = 1.0;

  double operator()(double s) const;
  double lower() const;  // c with c <= |g|
  double upper() const;  // C with |g| <= C
  bool noise_free() const { return base == 0.0 && amplitude == 0.0; }
};

struct OUModelConfig {
  double theta = 1.0;
  Diffusion g;
  double y0 = 0.0;
  double horizon = 500.0;
  double dt = 0.01;

  /// Throws PreconditionError on θ <= 0, θ dt >= 0.1 or a g violating its
  /// bounds on the grid.
  void validate() const;
  std::size_t steps() const;
};

struct ModelPath {
  UniformGrid grid;
  std::vector<double> values;
};

/// Euler-Maruyama: Y_{k+1} = Y_k - θ Y_k dt + g(t_k) sqrt(dt) N_k.
ModelPath simulate_ou_model(const OUModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate = 0);

/// -Σ Y_k (Y_{k+1} - Y_k) / (Σ Y_k^2 dt), left-point sums.
double ou_drift_estimator(std::span<const double> y, double dt);
double ou_drift_estimator(const ModelPath& path);

/// |θ̂(dt) - θ̂(dt/2)| with both runs driven by the same Brownian path.
double ou_half_step_gap(const OUModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate = 0);

struct FracModelConfig {
  double theta = 2.0;
  double hurst = 0.7;
  FunctionSpec f = FunctionSpec::poly({0.0, 1.0});  // g = f^2
  ProcessSpec driver = ProcessSpec::stationary_ou(1.0);
  double x0 = 0.0;
  double horizon = 500.0;
  double dt = 0.0;        // 0: default_dt(driver)
  double epsilon = 0.2;   // exponent slack in the diagnostics

  void validate() const;
};

struct FracEstimate {
  double theta_hat = 0.0;
  double integral = 0.0;     // ∫_0^T g(Y_s) ds
  double x_t = 0.0;
  double b_t = 0.0;          // B^H_T
  double x0_term = 0.0;      // X_0 / integral
  double noise_term = 0.0;   // B^H_T / integral
  double b_scaled = 0.0;     // B^H_T / T^{H+ε}
  double integral_scaled = 0.0;  // integral / T^{H+ε}
};

/// Simulates Y from the driver and B^H_T ~ N(0, T^{2H}) independently and
/// returns X_T / ∫ g(Y) ds.
FracEstimate frac_drift_estimator(const FracModelConfig& cfg, std::uint64_t seed, std::uint64_t replicate = 0);

std::vector<double> ou_estimates(const OUModelConfig& cfg, std::size_t replicates, std::uint64_t seed,
                                 Exec exec = Exec::Parallel);
std::vector<FracEstimate> frac_estimates(const FracModelConfig& cfg, std::size_t replicates,
                                         std::uint64_t seed, Exec exec = Exec::Parallel);

/// Median of |estimate - theta|.
double median_abs_error(std::span<const double> estimates, double theta);

}  // namespace smallball
