#include "smallball/simulate.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <algorithm>
#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>

#include "smallball/errors.hpp"
#include "smallball/io.hpp"

namespace smallball {
namespace {

// The FFTW planner is not thread-safe; plan creation and destruction are
// serialised, execution with new arrays is safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer make_fftw_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer(p);
}

// Integer multiple test tolerant to the rounding of t0 + i*dt.
bool near_integer(double x, double scale) {
  return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, scale);
}

double fgn_autocovariance(double hurst, double dt, std::size_t k) {
  const double h2 = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  const double v = std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) +
                   (k == 0 ? 1.0 : std::pow(kk - 1.0, h2));
  return 0.5 * std::pow(dt, h2) * v;
}

}  // namespace

std::string_view to_string(SimMethod method) {
  switch (method) {
    case SimMethod::CholeskyExact: return "cholesky";
    case SimMethod::CirculantEmbedding: return "circulant";
    case SimMethod::MarkovRecursion: return "markov";
    case SimMethod::BridgeConstruction: return "bridge";
    case SimMethod::SawtoothDirect: return "sawtooth";
  }
  return "?";
}

SimMethod default_method(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::FBM: return SimMethod::CirculantEmbedding;
    case ProcessKind::PeriodicBridge: return SimMethod::BridgeConstruction;
    case ProcessKind::StationaryOU: return SimMethod::MarkovRecursion;
    case ProcessKind::FractionalOU:
    case ProcessKind::TemperedStationary: return SimMethod::CholeskyExact;
    case ProcessKind::RandomSawtooth: return SimMethod::SawtoothDirect;
  }
  return SimMethod::CholeskyExact;
}

bool method_admissible(SimMethod method, ProcessKind kind) {
  if (kind == ProcessKind::RandomSawtooth) return method == SimMethod::SawtoothDirect;
  if (method == SimMethod::CholeskyExact) return true;
  return method == default_method(kind);
}

struct PathSampler::Cholesky {
  std::vector<std::size_t> active;  // grid indices with positive variance
  Eigen::MatrixXd factor;           // lower triangle holds L
};

struct PathSampler::Circulant {
  std::size_t offset = 0;      // t0 / dt
  std::size_t increments = 0;  // offset + steps
  std::size_t size = 0;        // circulant dimension 2 * increments
  std::vector<double> scale;   // sqrt(lambda_j / size)
  fftw_plan plan = nullptr;

  ~Circulant() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

namespace {

// Builds the covariance matrix over `active` points and factorises it in
// place, adding bounded diagonal jitter when needed.
double factorise(Eigen::MatrixXd& cov, const std::function<void(Eigen::MatrixXd&)>& fill) {
  fill(cov);
  const auto n = static_cast<double>(cov.rows());
  const double base = 1e-12 * cov.trace() / n;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    if (attempt > 0) {
      fill(cov);
      jitter = base * std::pow(10.0, attempt - 1);
      cov.diagonal().array() += jitter;
    }
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(cov);
    if (llt.info() == Eigen::Success) return jitter;
  }
  throw FactorizationError("Cholesky factorisation failed after 3 jitter attempts (last jitter " +
                           io::format_double(jitter) + ")");
}

}  // namespace

PathSampler::PathSampler(ProcessSpec spec, UniformGrid grid, std::optional<SimMethod> method)
    : spec_(spec), grid_(grid), method_(method.value_or(default_method(spec.kind))) {
  spec_.validate();
  if (!(grid_.dt > 0.0) || !std::isfinite(grid_.dt)) throw PreconditionError("sampler: dt must be positive");
  if (!(grid_.t0 >= 0.0)) throw PreconditionError("sampler: t0 must be >= 0");
  if (grid_.steps < 1) throw PreconditionError("sampler: need at least one step");
  if (grid_.steps > kMaxSteps)
    throw PreconditionError("sampler: " + std::to_string(grid_.steps) +
                            " steps exceed the memory guard of 2^20");
  if (!method_admissible(method_, spec_.kind))
    throw PreconditionError("sampler: method " + std::string(to_string(method_)) +
                            " is not admissible for " + spec_.describe());

  if (method_ == SimMethod::CirculantEmbedding) {
    const double ratio = grid_.t0 / grid_.dt;
    if (!near_integer(ratio, ratio)) {
      note_ = "t0 is not a multiple of dt; fell back to Cholesky";
      method_ = SimMethod::CholeskyExact;
    } else {
      auto circ = std::make_unique<Circulant>();
      circ->offset = static_cast<std::size_t>(std::llround(ratio));
      circ->increments = circ->offset + grid_.steps;
      if (circ->increments > 2 * kMaxSteps)
        throw PreconditionError("sampler: t0/dt + steps exceeds the circulant memory guard");
      circ->size = 2 * circ->increments;
      const std::size_t m = circ->size;
      auto in = make_fftw_buffer(m);
      auto out = make_fftw_buffer(m);
      {
        std::lock_guard lock(fftw_planner_mutex());
        circ->plan = fftw_plan_dft_1d(static_cast<int>(m), in.get(), out.get(), FFTW_FORWARD,
                                      FFTW_ESTIMATE);
      }
      if (!circ->plan) throw std::runtime_error("sampler: FFTW plan creation failed");
      const std::size_t n_inc = circ->increments;
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t lag = k <= n_inc ? k : m - k;
        in[k][0] = fgn_autocovariance(spec_.hurst, grid_.dt, lag);
        in[k][1] = 0.0;
      }
      fftw_execute_dft(circ->plan, in.get(), out.get());
      circ->scale.resize(m);
      double most_negative = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double lambda = out[k][0];
        most_negative = std::min(most_negative, lambda);
        circ->scale[k] = std::sqrt(std::max(lambda, 0.0) / static_cast<double>(m));
      }
      if (most_negative < -1e-8) {
        note_ = "circulant embedding eigenvalue " + io::format_double(most_negative) +
                " < -1e-8; fell back to Cholesky";
        method_ = SimMethod::CholeskyExact;
      } else {
        circulant_ = std::move(circ);
      }
    }
  }

  if (method_ == SimMethod::CholeskyExact) {
    if (grid_.points() > kMaxCholeskyPoints)
      throw PreconditionError("sampler: Cholesky limited to " +
                              std::to_string(kMaxCholeskyPoints) + " grid points, got " +
                              std::to_string(grid_.points()));
    auto chol = std::make_unique<Cholesky>();
    const std::size_t n = grid_.points();
    std::vector<double> variance(n);
    std::vector<double> autocov;
    if (spec_.is_stationary()) {
      autocov.resize(n);
      for (std::size_t k = 0; k < n; ++k)
        autocov[k] = stationary_autocovariance(spec_, static_cast<double>(k) * grid_.dt).value;
      variance.assign(n, autocov[0]);
    } else {
      for (std::size_t i = 0; i < n; ++i) variance[i] = covariance(spec_, grid_.time(i), grid_.time(i)).value;
    }
    const double peak = *std::max_element(variance.begin(), variance.end());
    for (std::size_t i = 0; i < n; ++i)
      if (variance[i] > 1e-12 * peak) chol->active.push_back(i);
    const std::size_t m = chol->active.size();
    if (m > 0) {
      chol->factor.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      auto fill = [&](Eigen::MatrixXd& a) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t gi = chol->active[i], gj = chol->active[j];
            const double c = autocov.empty()
                                 ? covariance(spec_, grid_.time(gi), grid_.time(gj)).value
                                 : autocov[gi - gj];
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
          }
        }
      };
      jitter_ = factorise(chol->factor, fill);
      if (jitter_ > 0.0) {
        if (!note_.empty()) note_ += "; ";
        note_ += "Cholesky jitter " + io::format_double(jitter_) + " added to the diagonal";
      }
    }
    cholesky_ = std::move(chol);
  }
}

PathSampler::~PathSampler() = default;
PathSampler::PathSampler(PathSampler&&) noexcept = default;
PathSampler& PathSampler::operator=(PathSampler&&) noexcept = default;

SamplePath PathSampler::sample(std::uint64_t seed, std::uint64_t replicate) const {
  SamplePath path;
  path.spec = spec_;
  path.grid = grid_;
  path.seed = seed;
  path.replicate = replicate;
  path.values.resize(grid_.points());
  ReplicateRng rng(seed, replicate);
  sample_into(rng, path.values);
  return path;
}

void PathSampler::sample_into(ReplicateRng& rng, std::span<double> out) const {
  if (out.size() != grid_.points()) throw PreconditionError("sample_into: output size mismatch");
  switch (method_) {
    case SimMethod::MarkovRecursion:
      sample_markov(rng, out);
      return;
    case SimMethod::BridgeConstruction:
      sample_bridge(rng, out);
      return;
    case SimMethod::SawtoothDirect:
      sample_sawtooth(rng, out);
      return;
    case SimMethod::CirculantEmbedding: {
      const Circulant& c = *circulant_;
      auto in = make_fftw_buffer(c.size);
      auto spectrum = make_fftw_buffer(c.size);
      for (std::size_t k = 0; k < c.size; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        in[k][0] = c.scale[k] * re;
        in[k][1] = c.scale[k] * im;
      }
      fftw_execute_dft(c.plan, in.get(), spectrum.get());
      // Real part of the first `increments` entries is exact fractional
      // Gaussian noise; the path is its running sum from time 0.
      double level = 0.0;
      for (std::size_t k = 0; k < c.offset; ++k) level += spectrum[k][0];
      out[0] = level;
      for (std::size_t i = 1; i < out.size(); ++i) {
        level += spectrum[c.offset + i - 1][0];
        out[i] = level;
      }
      return;
    }
    case SimMethod::CholeskyExact: {
      const Cholesky& c = *cholesky_;
      std::fill(out.begin(), out.end(), 0.0);
      const auto m = static_cast<Eigen::Index>(c.active.size());
      if (m == 0) return;
      Eigen::VectorXd z(m);
      for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
      const Eigen::VectorXd x = c.factor.triangularView<Eigen::Lower>() * z;
      for (Eigen::Index i = 0; i < m; ++i) out[c.active[static_cast<std::size_t>(i)]] = x(i);
      return;
    }
  }
}

void PathSampler::sample_markov(ReplicateRng& rng, std::span<double> out) const {
  const double theta = spec_.theta;
  const double phi = std::exp(-theta * grid_.dt);
  const double innovation = std::sqrt(-std::expm1(-2.0 * theta * grid_.dt) / (2.0 * theta));
  out[0] = std::sqrt(0.5 / theta) * rng.normal();
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = phi * out[i - 1] + innovation * rng.normal();
}

void PathSampler::sample_bridge(ReplicateRng& rng, std::span<double> out) const {
  // Sequential conditioning: given X at the previous point of the same unit
  // interval (or the pin at its left end), X_t is Gaussian with the bridge
  // mean and variance towards the pin at k + 1.
  double prev_t = 0.0, prev_x = 0.0;
  double prev_k = -1.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = grid_.time(i);
    if (near_integer(t, t)) {
      out[i] = 0.0;
      prev_k = std::round(t);
      prev_t = prev_k;
      prev_x = 0.0;
      continue;
    }
    const double k = std::floor(t);
    if (k != prev_k) {
      prev_k = k;
      prev_t = k;
      prev_x = 0.0;
    }
    const double right = k + 1.0;
    const double span = right - prev_t;
    const double mean = prev_x * (right - t) / span;
    const double var = (t - prev_t) * (right - t) / span;
    out[i] = mean + std::sqrt(var) * rng.normal();
    prev_t = t;
    prev_x = out[i];
  }
}

void PathSampler::sample_sawtooth(ReplicateRng& rng, std::span<double> out) const {
  const double xi =
      spec_.xi_law == XiLaw::Rademacher ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : sample_exp_small_ball(rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xi * sawtooth_profile(grid_.time(i));
}

double sample_exp_small_ball(ReplicateRng& rng) {
  // Envelope: uniform on (0,1]; accept with exp(-x^-2) / exp(-1).
  for (;;) {
    const double x = rng.uniform();
    const double u = rng.uniform();
    if (u <= std::exp(1.0 - 1.0 / (x * x))) return rng.uniform() < 0.5 ? -x : x;
  }
}

SamplePath sample_path(const ProcessSpec& spec, double t0, double dt, std::size_t n,
                       std::uint64_t seed) {
  return PathSampler(spec, UniformGrid{t0, dt, n}).sample(seed, 0);
}

std::vector<SamplePath> sample_paths(const ProcessSpec& spec, const UniformGrid& grid,
                                     const SimConfig& cfg, Exec exec) {
  if (cfg.replicates == 0) throw PreconditionError("sample_paths: replicates must be positive");
  const PathSampler sampler(spec, grid, cfg.method);
  std::vector<SamplePath> paths(cfg.replicates);
  for_each_index(cfg.replicates, exec,
                 [&](std::size_t r) { paths[r] = sampler.sample(cfg.base_seed, r); });
  return paths;
}

std::vector<LagMoment> increment_moments(std::span<const SamplePath> paths, int r,
                                         std::size_t max_lag_steps) {
  if (paths.empty()) throw PreconditionError("increment_moments: empty path set");
  if (r != 2 && r != 4 && r != 8) throw PreconditionError("increment_moments: r must be 2, 4 or 8");
  const UniformGrid& grid = paths.front().grid;
  for (const auto& p : paths)
    if (p.grid.steps != grid.steps || p.grid.dt != grid.dt || p.grid.t0 != grid.t0)
      throw PreconditionError("increment_moments: paths must share one grid");
  max_lag_steps = std::min(max_lag_steps, grid.steps);

  std::vector<LagMoment> out;
  out.reserve(max_lag_steps + 1);
  const double count = static_cast<double>(paths.size());
  for (std::size_t lag = 0; lag <= max_lag_steps; ++lag) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& p : paths) {
      double acc = 0.0;
      const std::size_t starts = p.values.size() - lag;
      for (std::size_t i = 0; i < starts; ++i)
        acc += std::pow(std::abs(p.values[i + lag] - p.values[i]), r);
      const double m = acc / static_cast<double>(starts);
      sum += m;
      sum_sq += m * m;
    }
    const double mean = sum / count;
    const double var = paths.size() > 1 ? std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0)) : 0.0;
    LagMoment lm;
    lm.lag_steps = lag;
    lm.lag = static_cast<double>(lag) * grid.dt;
    lm.norm = std::pow(mean, 1.0 / r);
    lm.standard_error = std::sqrt(var / count);
    out.push_back(lm);
  }
  return out;
}

void write_path_csv(std::ostream& out, const SamplePath& path) {
  io::CsvWriter csv(out, {"t", "value"},
                    {{"spec", path.spec.describe()},
                     {"seed", std::to_string(path.seed)},
                     {"replicate", std::to_string(path.replicate)}});
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    csv.cell(path.time(i)).cell(path.values[i]);
    csv.end_row();
  }
}

}  // namespace smallball
