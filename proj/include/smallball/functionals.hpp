#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smallball/kernels.hpp"
#include "smallball/parallel.hpp"
#include "smallball/simulate.hpp"
#include "smallball/testfuncs.hpp"

namespace smallball {

/// T0, 2 T0, ..., 2^doublings T0.
std::vector<double> dyadic_horizons(double t0 = 1.0, int doublings = 9);

/// Grid step used by the experiments: 2^-4 for covariance-factorisation
/// samplers, 2^-6 otherwise.
double default_dt(const ProcessSpec& spec);

/// Running trapezoid ∫_{t0}^{t_k} f(X_t)^2 dt at every grid point.
std::vector<double> cumulative_functional(const SamplePath& path, const FunctionSpec& f);

struct IntegralSeries {
  std::string function;  // FunctionSpec::describe()
  ProcessSpec spec;
  std::vector<double> horizons;
  std::vector<double> values;  // I_T per horizon
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

/// I_T = ∫_0^T f(X_t)^2 dt at each horizon; horizons must lie on the grid.
IntegralSeries integral_functional(const SamplePath& path, const FunctionSpec& f,
                                   std::span<const double> horizons);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::vector<double> residuals;
};

/// Least squares of log I_T on log T; needs >= 5 horizons with I_T > 0.
/// Optional weights are per-horizon inverse variances of log I_T.
RateFit fit_rate(std::span<const double> horizons, std::span<const double> values,
                 std::span<const double> weights = {});

struct DivergenceConfig {
  ProcessSpec spec;
  FunctionSpec f = FunctionSpec::poly({0.0, 0.0, 1.0});
  double epsilon = 0.5;
  std::vector<double> horizons = dyadic_horizons();
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  double dt = 0.0;  // 0: default_dt(spec)
  Exec exec = Exec::Parallel;
};

struct DivergenceResult {
  RateFit pooled;      // weighted fit to the replicate mean of I_T
  RateFit pooled_ols;  // same points, unit weights
  std::vector<double> replicate_slopes;
  std::vector<IntegralSeries> series;
  std::vector<double> min_scaled;  // per replicate: min over horizons of T^{-1+ε} I_T
  std::vector<char> increasing;    // final-horizon scaled value > median-horizon value
  std::size_t increasing_count = 0;
  double median_horizon = 0.0;
  double final_horizon = 0.0;
  double dt = 0.0;
};

DivergenceResult divergence_experiment(const DivergenceConfig& cfg);

struct SelfSimilarConfig {
  double hurst = 0.5;
  double p = 2.0;
  double epsilon = 0.5;
  double beta = 4.5;
  std::size_t k_max = 4;
  std::size_t replicates = 50;
  std::uint64_t seed = 0;
  double dt = 1.0 / 64.0;
  Exec exec = Exec::Parallel;
};

struct SelfSimilarResult {
  std::vector<double> ks;
  std::vector<std::vector<double>> normalized;  // [replicate][k]: k^{-β(1+ε)} ∫_0^{k^β} |X|^p
  std::vector<double> minima;                   // per replicate, over k
  bool all_positive = false;
  std::size_t growing_count = 0;  // replicates whose value at k_max exceeds the one at the smallest k
};

/// Runs for FBM; precondition 0 < ε < pH and β > (H - ε/p)^-1.
SelfSimilarResult selfsimilar_lowerbound_experiment(const SelfSimilarConfig& cfg);

/// ∫_0^1∫_0^1 E B_s B_u du ds for FBM, by nested quadrature.
double fbm_unit_integral_variance(double hurst);

struct ErgodicSummary {
  double mean = 0.0;
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> values;  // T^-1 I_T per replicate
};

ErgodicSummary ergodic_limit(const ProcessSpec& spec, const FunctionSpec& f, double horizon,
                             std::size_t replicates, std::uint64_t seed, double dt = 0.0,
                             Exec exec = Exec::Parallel);

}  // namespace smallball
