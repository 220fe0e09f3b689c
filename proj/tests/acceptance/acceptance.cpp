// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "smallball/estimators.hpp"
#include "smallball/functionals.hpp"
#include "smallball/io.hpp"
#include "smallball/kernels.hpp"
#include "smallball/oracles.hpp"
#include "smallball/simulate.hpp"
#include "smallball/smallball.hpp"
#include "smallball/stats.hpp"
#include "smallball/testfuncs.hpp"

using namespace smallball;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1. Oracle suite.
Verdict oracle_suite() {
  const auto start = Clock::now();
  Verdict v;
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> hurst(0.55, 0.95), pos(0.0, 5.0);
  double worst = 0.0;
  bool triples_ok = true;
  for (int k = 0; k < 50; ++k) {
    const double h = hurst(gen), x = pos(gen), y = pos(gen);
    const auto r = oracles::lemma_a1_integral(h, x, y);
    const double gap = std::abs(r.closed_form - r.quadrature.value);
    worst = std::max(worst, gap);
    triples_ok = triples_ok && gap <= 1e-8 + 10 * r.quadrature.abs_error_estimate && r.within_bound;
  }
  v.require(triples_ok, "a1 50 triples max gap " + fmt(worst, 2));

  double a3_worst = 0.0;
  for (double h : {0.6, 0.75, 0.9}) {
    const auto l = oracles::lemma_a3_limit(h);
    a3_worst = std::max(a3_worst, std::abs(l.limit - oracles::gamma_function(2 * h - 1)));
  }
  v.require(a3_worst < 1e-3, "a3 limit max error " + fmt(a3_worst, 2));

  double i0_worst = 0.0;
  for (double h : {0.55, 0.6, 0.75, 0.9})
    i0_worst = std::max(i0_worst, std::abs(oracles::lemma_a2_i5(h, 0.0).value - oracles::gamma_function(2 * h - 1)));
  v.require(i0_worst < 1e-6, "I0 identity max error " + fmt(i0_worst, 2));

  const double t = seconds_since(start);
  v.require(t < 30.0, "runtime " + fmt(t, 3) + " s < 30 s");
  return v;
}

// 2. Sampler exactness on a 16-point grid.
Verdict sampler_exactness() {
  const auto start = Clock::now();
  Verdict v;
  const std::size_t reps = 200000;
  const double dt = 0.17;
  const UniformGrid grid{dt, dt, 15};
  const std::vector<ProcessSpec> specs{ProcessSpec::fbm(0.7),           ProcessSpec::periodic_bridge(),
                                       ProcessSpec::stationary_ou(1.0),   ProcessSpec::fractional_ou(0.7),
                                       ProcessSpec::tempered(1.0, 0.5),   ProcessSpec::sawtooth()};
  std::uint64_t seed = 1000;
  for (const auto& spec : specs) {
    const PathSampler sampler(spec, grid);
    const std::size_t n = grid.points();
    std::vector<double> values(reps * n);
    for_each_index(reps, Exec::Parallel, [&](std::size_t r) {
      ReplicateRng rng(seed, r);
      sampler.sample_into(rng, std::span(values).subspan(r * n, n));
    });
    ++seed;
    // The processes are centred, so the covariance estimate is the mean of
    // X_i X_j and its standard error the sd of the products over sqrt(reps).
    double worst_z = 0.0;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
          const double p = values[r * n + i] * values[r * n + j];
          sum += p;
          sum_sq += p * p;
        }
        const double mean = sum / reps;
        const double se = std::sqrt(std::max(0.0, sum_sq / reps - mean * mean) / (reps - 1.0));
        const double exact = covariance(spec, grid.time(i), grid.time(j)).value;
        const double gap = std::abs(mean - exact);
        if (se == 0.0) {
          if (gap > 1e-12) ++violations;
          continue;
        }
        worst_z = std::max(worst_z, gap / se);
        if (gap > 4.0 * se) ++violations;
      }
    }
    v.require(violations == 0, spec.describe() + " max |z| " + fmt(worst_z, 3));
  }
  const double t = seconds_since(start);
  v.require(t < 300.0, "runtime " + fmt(t, 3) + " s < 300 s");
  return v;
}

// 3. Fractional OU variance and local variogram.
Verdict fou_variance_check() {
  Verdict v;
  for (double h : {0.6, 0.75}) {
    const double gap = std::abs(fou_variance(h) - h * oracles::gamma_function(2 * h));
    v.require(gap < 1e-4, "H=" + fmt(h) + " variance gap " + fmt(gap, 2));
  }
  for (double h : {0.6, 0.75}) {
    const double lag = 1e-3;
    const double ratio = variogram(ProcessSpec::fractional_ou(h), 0.0, lag) / std::pow(lag, 2 * h);
    v.require(ratio >= 0.9 && ratio <= 1.1, "H=" + fmt(h) + " variogram ratio " + fmt(ratio, 5));
  }
  return v;
}

// 4. Small-ball dominance with grid-refinement stability.
Verdict small_ball_dominance() {
  const auto start = Clock::now();
  Verdict v;
  const std::vector<ProcessSpec> specs{ProcessSpec::stationary_ou(1.0), ProcessSpec::periodic_bridge(),
                                       ProcessSpec::fbm(0.7)};
  const std::vector<double> deltas{0.05, 0.1, 0.2, 0.4, 0.8};
  const std::vector<double> fractions{0.2, 0.4, 0.6, 0.9};
  const std::vector<double> starts{0.0, 0.3, 1.7, 10.0};
  std::uint64_t seed = 2000;
  for (const auto& spec : specs) {
    const auto params = *default_params(spec);
    std::size_t admissible = 0, dominated = 0, stable = 0, k = 0;
    double largest = 0.0;
    for (double delta : deltas) {
      const double edge = *params.k3 * std::pow(delta, *params.gamma);
      std::vector<double> etas;
      for (double f : fractions) etas.push_back(f * edge);
      SmallBallOptions opts;
      opts.replicates = 10000;
      opts.seed = seed++;
      const double s = starts[k++ % starts.size()];
      for (const auto& r : small_ball_sweep(spec, s, delta, etas, opts)) {
        if (!r.admissible) continue;
        ++admissible;
        largest = std::max(largest, r.p_hat);
        if (r.p_hat - 2 * r.half_width <= *r.analytic_bound) ++dominated;
        if (r.refinement_stable) ++stable;
      }
    }
    v.require(admissible >= 20 && dominated == admissible && stable == admissible,
              spec.describe() + " " + std::to_string(dominated) + "/" + std::to_string(admissible) +
                  " dominated, " + std::to_string(stable) + " stable, max p_hat " + fmt(largest, 3));
  }
  const double t = seconds_since(start);
  v.require(t < 600.0, "runtime " + fmt(t, 3) + " s < 600 s");
  return v;
}

// 5. Increment covariance sums.
Verdict increment_sums() {
  Verdict v;
  bool bridge_ok = true;
  for (double a : {0.25, 0.125})
    for (double delta : {0.25, 0.5}) {
      const auto s = increment_cov_sum(ProcessSpec::periodic_bridge(), a, delta);
      bridge_ok = bridge_ok && s.cov_sq_sum <= a * delta * delta + a * a * std::pow(delta, 4);
    }
  v.require(bridge_ok, "bridge S <= a D^2 + a^2 D^4 at 4 points");
  bool ou_ok = true;
  for (double delta : {0.25, 0.5, 1.0, 1.5, 1.99}) {
    const auto s = increment_cov_sum(ProcessSpec::stationary_ou(1.0), 0.5, delta);
    ou_ok = ou_ok && s.cov_sq_sum <= (1 + std::numbers::e / 2) * 0.5 * delta * delta;
  }
  v.require(ou_ok, "ou S <= (1+e/2) a D^2 at 5 points");
  return v;
}

// 6. Condition checkers.
Verdict checkers() {
  Verdict v;
  for (const char* name : {"poly:0,0,1", "poly:1,-2,0,1", "trig:1,1,0,1", "trig:2,3,1,3", "x3sininv", "sincluster"}) {
    const auto f = parse_function(name);
    const bool ok = f.a1 && check_a1i(f, f.a1->k, f.a1->eta_star, default_range(f)).passes;
    v.require(ok, std::string(name) + " declared constants");
  }
  const auto e = parse_function("exp:1,1");
  v.require(!check_a1i(e, 2.0, 0.5, {-20.0, 0.0}).passes, "exp fails on [-20,0]");
  bool lemma1 = true, growth = true;
  for (const char* name : {"poly:0,0,1", "poly:1,-2,0,1", "trig:1,1,0,1", "trig:2,3,1,3", "x3sininv", "sincluster",
                           "abspow:1.5", "const:2"}) {
    const auto f = parse_function(name);
    for (double eta : {0.02, 0.05, 0.1, 0.3}) lemma1 = lemma1 && check_lemma1_equivalences(f, eta, default_range(f)).holds;
    growth = growth && f.growth_constant() && check_a1ii(f, *f.growth_constant(), {-1000.0, 1000.0});
  }
  v.require(lemma1, "K2(eta) >= K(eta/2) on all built-ins");
  v.require(growth, "derivative growth bound on [-1000, 1000]");
  return v;
}

// 7. Divergence rate and ergodic mean.
Verdict divergence() {
  const auto start = Clock::now();
  Verdict v;
  DivergenceConfig cfg;
  cfg.spec = ProcessSpec::stationary_ou(1.0);
  cfg.epsilon = 0.5;
  cfg.replicates = 100;
  cfg.seed = 7;
  const auto r = divergence_experiment(cfg);
  v.require(r.pooled.slope >= 0.95 && r.pooled.slope <= 1.05,
            "slope " + fmt(r.pooled.slope) + " (unweighted " + fmt(r.pooled_ols.slope) + ")");
  v.require(r.increasing_count >= 99, "growing " + std::to_string(r.increasing_count) + "/100");
  const auto erg = ergodic_limit(cfg.spec, cfg.f, 500.0, 200, 8);
  v.require(std::abs(erg.mean - 0.75) < 0.05, "ergodic mean " + fmt(erg.mean) + ", min " + fmt(erg.min, 3));
  const double t = seconds_since(start);
  v.require(t < 300.0, "runtime " + fmt(t, 3) + " s < 300 s");
  return v;
}

// 8. Unbounded process and the self-similar lower bound.
Verdict unbounded_regime() {
  Verdict v;
  DivergenceConfig cfg;
  cfg.spec = ProcessSpec::fbm(0.5);
  cfg.epsilon = 0.5;
  cfg.replicates = 50;
  cfg.seed = 9;
  const auto r = divergence_experiment(cfg);
  v.require(r.pooled.slope >= 0.5, "fbm slope " + fmt(r.pooled.slope));
  std::size_t below = 0;
  for (double s : r.replicate_slopes)
    if (!(s >= 0.5)) ++below;
  v.require(below == 0, std::to_string(50 - below) + "/50 replicate slopes >= 0.5");
  SelfSimilarConfig ss;
  ss.seed = 10;
  const auto s = selfsimilar_lowerbound_experiment(ss);
  const double smallest = *std::min_element(s.minima.begin(), s.minima.end());
  v.require(s.all_positive, "self-similar minima > 0 in " + std::to_string(s.minima.size()) + " replicates (min " +
                                fmt(smallest, 3) + ", beta " + fmt(ss.beta) + ")");
  return v;
}

// 9. Drift estimators.
Verdict estimators() {
  Verdict v;
  OUModelConfig ou;
  const auto base = ou_estimates(ou, 100, 11);
  const double e500 = median_abs_error(base, 1.0);
  v.require(e500 < 0.1, "ou g=1 median error " + fmt(e500, 3));
  OUModelConfig wavy = ou;
  wavy.g = Diffusion{1.0, 0.5, 1.0};
  const double ew = median_abs_error(ou_estimates(wavy, 100, 11), 1.0);
  v.require(ew < 0.1, "ou g=1+sin/2 median error " + fmt(ew, 3));
  OUModelConfig short_run = ou;
  short_run.horizon = 50.0;
  const double e50 = median_abs_error(ou_estimates(short_run, 100, 11), 1.0);
  v.require(e500 < e50, "T=500 error below T=50 error " + fmt(e50, 3));
  const double gap = ou_half_step_gap(ou, 11);
  v.require(gap < 0.05, "half-step gap " + fmt(gap, 2));

  OUModelConfig still;
  still.g = Diffusion{0.0, 0.0, 1.0};
  still.y0 = 1.0;
  still.horizon = 1.0;
  still.dt = 1e-3;
  const auto path = simulate_ou_model(still, 1);
  const double theta_err = std::abs(ou_drift_estimator(path) - still.theta);
  const double ode_err = std::abs(path.values.back() - std::exp(-1.0));
  v.require(theta_err <= still.dt && ode_err <= still.dt,
            "noise-free theta error " + fmt(theta_err, 2) + ", path error " + fmt(ode_err, 2));

  FracModelConfig frac;
  const auto est = frac_estimates(frac, 100, 12);
  std::vector<double> theta_hat, x0_free;
  for (const auto& e : est) theta_hat.push_back(e.theta_hat);
  const double ef = median_abs_error(theta_hat, frac.theta);
  std::vector<double> noise;
  for (const auto& e : est) noise.push_back(std::abs(e.noise_term));
  v.require(ef < 0.15, "fractional median error " + fmt(ef, 3) + " (median |B_T/I| " + fmt(stats::median(noise), 3) +
                           ")");
  FracModelConfig shifted = frac;
  shifted.x0 = 5.0;
  std::vector<double> x0_terms;
  for (const auto& e : frac_estimates(shifted, 100, 12)) x0_terms.push_back(std::abs(e.x0_term));
  v.require(*std::max_element(x0_terms.begin(), x0_terms.end()) < 0.05,
            "max |X0/I| " + fmt(*std::max_element(x0_terms.begin(), x0_terms.end()), 3));
  return v;
}

// 10. Manifest re-runs give byte-identical CSV.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict reproducibility() {
  Verdict v;
  const char* env = std::getenv("SMALLBALL_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "smallball_acceptance";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> runs{
      {"simulate", "--process", "fbm", "--process-hurst", "0.7", "--steps", "256", "--replicates", "4"},
      {"simulate", "--process", "fou", "--process-hurst", "0.8", "--steps", "128", "--dt", "0.0625"},
      {"smallball", "--process", "bridge", "--delta", "0.25", "--etas", "0.01,0.02,0.04", "--replicates", "2000"},
      {"diverge", "--replicates", "10", "--doublings", "6"},
      {"ergodic", "--process", "ou"},
      {"estimate-ou", "--replicates", "10", "--horizon", "100"},
      {"estimate-frac", "--replicates", "10", "--horizon", "100"},
      {"selfsim", "--replicates", "5", "--k-max", "3"},
      {"check-a1", "--function", "x3sininv"},
      {"oracle", "--lemma", "a2"},
  };
  std::size_t identical = 0, k = 0;
  for (auto args : runs) {
    const std::string name = args.front() + std::to_string(k++);
    const fs::path first = root / "first", second = root / "second";
    args.insert(args.end(), {"--seed", "31", "--name", name, "-o", first.string()});
    std::ostringstream out, err;
    const int code = smallball::cli::run(args, out, err);
    if (code == smallball::cli::kExitUsage) {
      v.require(false, name + ": " + err.str());
      continue;
    }
    const int again = smallball::cli::run({"--config", (first / (name + ".manifest")).string(), "-o", second.string()},
                                          out, err);
    const std::string a = slurp(first / (name + ".csv")), b = slurp(second / (name + ".csv"));
    if (again == code && !a.empty() && a == b) ++identical;
  }
  v.require(identical == runs.size(),
            std::to_string(identical) + "/" + std::to_string(runs.size()) + " manifest re-runs byte-identical");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"oracle suite", oracle_suite},
      {"sampler exactness", sampler_exactness},
      {"fractional OU variance", fou_variance_check},
      {"small-ball dominance", small_ball_dominance},
      {"increment covariance sums", increment_sums},
      {"condition checkers", checkers},
      {"divergence rate", divergence},
      {"unbounded process regime", unbounded_regime},
      {"drift estimators", estimators},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    if (!v.pass) ++failures;
    std::printf("criterion %2zu %s  %s: %s (%.1f s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
