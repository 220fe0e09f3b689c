#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "smallball/kernels.hpp"
#include "smallball/parallel.hpp"
#include "smallball/rng.hpp"

namespace smallball {

enum class SimMethod {
  CholeskyExact,
  CirculantEmbedding,
  MarkovRecursion,
  BridgeConstruction,
  SawtoothDirect,
};

std::string_view to_string(SimMethod method);

/// Preferred exact method per process kind.
SimMethod default_method(ProcessKind kind);
/// CholeskyExact is admissible for every Gaussian kind; the sawtooth is not
/// Gaussian and only has its direct sampler.
bool method_admissible(SimMethod method, ProcessKind kind);

/// Largest number of grid steps any sampler accepts.
inline constexpr std::size_t kMaxSteps = std::size_t{1} << 20;
/// Largest number of grid points for covariance-matrix factorisation.
inline constexpr std::size_t kMaxCholeskyPoints = 4096;

struct UniformGrid {
  double t0 = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;  // points = steps + 1

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  std::size_t points() const { return steps + 1; }
};

struct SamplePath {
  ProcessSpec spec;
  UniformGrid grid;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  double time(std::size_t i) const { return grid.time(i); }
};

struct SimConfig {
  std::optional<SimMethod> method;  // empty: default_method(kind)
  std::size_t replicates = 1;
  std::uint64_t base_seed = 0;
};

/// Precomputed sampler for one (spec, grid): factorisations and FFT
/// eigenvalues are built once and shared read-only across threads.
class PathSampler {
 public:
  PathSampler(ProcessSpec spec, UniformGrid grid, std::optional<SimMethod> method = {});
  ~PathSampler();
  PathSampler(PathSampler&&) noexcept;
  PathSampler& operator=(PathSampler&&) noexcept;
  PathSampler(const PathSampler&) = delete;
  PathSampler& operator=(const PathSampler&) = delete;

  /// Replicate `replicate` of the stream keyed by `seed`.
  SamplePath sample(std::uint64_t seed, std::uint64_t replicate = 0) const;
  void sample_into(ReplicateRng& rng, std::span<double> out) const;

  const ProcessSpec& spec() const { return spec_; }
  const UniformGrid& grid() const { return grid_; }
  /// Method actually used (differs from the request after a fallback).
  SimMethod method() const { return method_; }
  /// Non-empty when the sampler fell back or regularised; human readable.
  const std::string& note() const { return note_; }
  /// Diagonal jitter added before the Cholesky factorisation succeeded.
  double jitter() const { return jitter_; }

 private:
  struct Cholesky;
  struct Circulant;

  void sample_markov(ReplicateRng& rng, std::span<double> out) const;
  void sample_bridge(ReplicateRng& rng, std::span<double> out) const;
  void sample_sawtooth(ReplicateRng& rng, std::span<double> out) const;

  ProcessSpec spec_;
  UniformGrid grid_;
  SimMethod method_;
  std::string note_;
  double jitter_ = 0.0;
  std::unique_ptr<Cholesky> cholesky_;
  std::unique_ptr<Circulant> circulant_;
};

/// One path on t0, t0+dt, ..., t0+n*dt from replicate 0 of `seed`.
SamplePath sample_path(const ProcessSpec& spec, double t0, double dt, std::size_t n,
                       std::uint64_t seed);

/// Replicates 0..replicates-1 of cfg.base_seed; identical for both policies.
std::vector<SamplePath> sample_paths(const ProcessSpec& spec, const UniformGrid& grid,
                                     const SimConfig& cfg, Exec exec = Exec::Parallel);

/// Draw from the ExpSmallBall amplitude law (symmetric, density ∝ exp(-x^-2)
/// on 0 < |x| <= 1) by rejection from the uniform law.
double sample_exp_small_ball(ReplicateRng& rng);

struct LagMoment {
  std::size_t lag_steps = 0;
  double lag = 0.0;
  double norm = 0.0;            // (E|X_{t+lag} - X_t|^r)^{1/r}
  double standard_error = 0.0;  // of the r-th moment, across paths
};

/// Empirical L^r increment norms per lag, averaging over start points within
/// each path and then across paths. r must be 2, 4 or 8.
std::vector<LagMoment> increment_moments(std::span<const SamplePath> paths, int r,
                                         std::size_t max_lag_steps);

/// CSV with header comments spec=..., seed=..., then columns t,value.
void write_path_csv(std::ostream& out, const SamplePath& path);

}  // namespace smallball
