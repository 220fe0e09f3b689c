#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include "smallball/errors.hpp"
#include "smallball/estimators.hpp"
#include "smallball/functionals.hpp"
#include "smallball/io.hpp"
#include "smallball/kernels.hpp"
#include "smallball/oracles.hpp"
#include "smallball/parallel.hpp"
#include "smallball/simulate.hpp"
#include "smallball/smallball.hpp"
#include "smallball/stats.hpp"
#include "smallball/testfuncs.hpp"

#ifndef SMALLBALL_VERSION
#define SMALLBALL_VERSION "0.0.0"
#endif

namespace smallball::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Common {
  std::string output = ".";
  std::string name;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string exec = "parallel";
  bool dry_run = false;

  Exec policy() const { return exec == "serial" ? Exec::Serial : Exec::Parallel; }
};

struct ProcessOpts {
  std::string kind;
  double hurst = 0.5;
  double theta = 1.0;
  double alpha = 0.5;
  std::string xi = "exp";

  ProcessSpec build() const {
    ProcessSpec spec;
    switch (parse_process_kind(kind)) {
      case ProcessKind::FBM: spec = ProcessSpec::fbm(hurst); break;
      case ProcessKind::PeriodicBridge: spec = ProcessSpec::periodic_bridge(); break;
      case ProcessKind::StationaryOU: spec = ProcessSpec::stationary_ou(theta); break;
      case ProcessKind::FractionalOU: spec = ProcessSpec::fractional_ou(hurst, theta); break;
      case ProcessKind::TemperedStationary: spec = ProcessSpec::tempered(theta, alpha); break;
      case ProcessKind::RandomSawtooth: spec = ProcessSpec::sawtooth(parse_xi_law(xi)); break;
    }
    spec.validate();
    return spec;
  }
};

struct Report {
  std::string csv;
  Json summary = Json::object();
  std::string message;
  int status = kExitPass;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<std::string()> plan;  // validates the resolved config
  std::function<Report()> execute;
};

CLI::Option* number(CLI::App* app, const std::string& flag, double& v, const std::string& desc) {
  return app->add_option(flag, v, desc)->default_str(io::format_double(v));
}

template <class T>
CLI::Option* value(CLI::App* app, const std::string& flag, T& v, const std::string& desc) {
  return app->add_option(flag, v, desc)->capture_default_str();
}

void add_common(CLI::App* app, Common& c) {
  value(app, "-o,--output", c.output, "Output directory");
  value(app, "--name", c.name, "Artifact base name (default: the command)");
  value(app, "--seed", c.seed, "Base RNG seed (SMALLBALL_SEED overrides)");
  value(app, "--threads", c.threads, "Worker cap, 0 for the OpenMP default");
  value(app, "--exec", c.exec, "Execution policy")->check(CLI::IsMember({"parallel", "serial"}));
  app->add_flag("--dry-run", c.dry_run, "Validate and print the plan without computing");
}

void add_process(CLI::App* app, ProcessOpts& p, const std::string& prefix, const std::string& kind) {
  p.kind = kind;
  // The plain process gets short aliases (--theta, ...); the manifest keeps the long form.
  auto names = [&](const std::string& field) {
    std::string n = "--" + prefix + "-" + field;
    if (prefix == "process") n += ",--" + field;
    return n;
  };
  value(app, "--" + prefix, p.kind, "fbm, bridge, ou, fou, tempered or sawtooth");
  number(app, names("hurst"), p.hurst, "Hurst index (fbm, fou)");
  number(app, names("theta"), p.theta, "Mean reversion (ou, fou, tempered)");
  number(app, names("alpha"), p.alpha, "Kernel power (tempered)");
  value(app, names("xi"), p.xi, "Amplitude law (sawtooth): exp or rademacher");
}

std::string manifest(const CLI::App* sub, const Common& common) {
  std::ostringstream out;
  out << "# smallball " << SMALLBALL_VERSION << "\n";
  out << "command=" << sub->get_name() << "\n";
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (key == "help" || key == "dry-run") continue;
    std::string v;
    if (key == "seed")
      v = std::to_string(common.seed);
    else if (opt->count() > 0)
      v = opt->results().back();
    else
      v = opt->get_default_str();
    if (!v.empty()) out << key << "=" << v << "\n";
  }
  return out.str();
}

std::optional<SimMethod> parse_method(const std::string& text) {
  if (text.empty() || text == "auto") return std::nullopt;
  for (SimMethod m : {SimMethod::CholeskyExact, SimMethod::CirculantEmbedding, SimMethod::MarkovRecursion,
                      SimMethod::BridgeConstruction, SimMethod::SawtoothDirect})
    if (to_string(m) == text) return m;
  throw PreconditionError("unknown simulation method '" + text + "'");
}

std::string pass_word(bool pass) { return pass ? "pass" : "FAIL"; }

Json quantiles(std::span<const double> v) {
  return Json{{"q10", stats::quantile(v, 0.1)}, {"q50", stats::quantile(v, 0.5)}, {"q90", stats::quantile(v, 0.9)}};
}

// ---------------------------------------------------------------- commands

Command simulate_command(CLI::App& app, Common& c) {
  struct Opts {
    ProcessOpts process;
    double t0 = 0.0;
    double dt = 1.0 / 64.0;
    std::size_t steps = 1024;
    std::size_t replicates = 1;
    std::string method = "auto";
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("simulate", "Sample paths of a process on a uniform grid");
  add_common(cmd.app, c);
  add_process(cmd.app, o->process, "process", "fbm");
  number(cmd.app, "--t0", o->t0, "First grid time");
  number(cmd.app, "--dt", o->dt, "Grid step");
  value(cmd.app, "--steps", o->steps, "Number of grid steps");
  value(cmd.app, "--replicates", o->replicates, "Number of paths");
  value(cmd.app, "--method", o->method, "Sampler (auto or a method name)");
  cmd.plan = [o] {
    const ProcessSpec spec = o->process.build();
    const auto method = parse_method(o->method);
    if (method && !method_admissible(*method, spec.kind))
      throw PreconditionError(std::string(to_string(*method)) + " cannot sample " + spec.describe());
    if (o->steps == 0 || o->steps > kMaxSteps) throw PreconditionError("steps must lie in [1, 2^20]");
    return "sample " + std::to_string(o->replicates) + " path(s) of " + spec.describe() + " on " +
           std::to_string(o->steps + 1) + " points";
  };
  cmd.execute = [o, &c] {
    const ProcessSpec spec = o->process.build();
    const PathSampler sampler(spec, UniformGrid{o->t0, o->dt, o->steps}, parse_method(o->method));
    std::vector<std::vector<double>> paths(o->replicates);
    for_each_index(o->replicates, c.policy(),
                   [&](std::size_t r) { paths[r] = sampler.sample(c.seed, r).values; });
    std::ostringstream csv;
    io::CsvWriter w(csv, {"replicate", "t", "value"});
    for (std::size_t r = 0; r < paths.size(); ++r)
      for (std::size_t i = 0; i < paths[r].size(); ++i)
        w.cell(static_cast<std::uint64_t>(r)).cell(sampler.grid().time(i)).cell(paths[r][i]).end_row();
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"process", spec.describe()},
                   {"method", std::string(to_string(sampler.method()))},
                   {"note", sampler.note()},
                   {"jitter", sampler.jitter()},
                   {"points", sampler.grid().points()},
                   {"replicates", o->replicates}};
    rep.message = "simulate: " + std::to_string(o->replicates) + " path(s), method " +
                  std::string(to_string(sampler.method()));
    return rep;
  };
  return cmd;
}

Command smallball_command(CLI::App& app, Common& c) {
  struct Opts {
    ProcessOpts process;
    double s = 0.0;
    double delta = 1.0;
    std::string etas = "0.05,0.1,0.2,0.3";
    std::size_t replicates = 10000;
    double dt = 0.0;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("smallball", "Empirical small-ball probabilities against the analytic bound");
  add_common(cmd.app, c);
  add_process(cmd.app, o->process, "process", "ou");
  number(cmd.app, "--s", o->s, "Window start");
  number(cmd.app, "--delta", o->delta, "Window length");
  value(cmd.app, "--etas", o->etas, "Ball radii, comma separated");
  value(cmd.app, "--replicates", o->replicates, "Paths per radius (>= 1000)");
  number(cmd.app, "--dt", o->dt, "Grid step, 0 for delta/64");
  cmd.plan = [o] {
    const ProcessSpec spec = o->process.build();
    const auto etas = io::parse_double_list(o->etas);
    if (etas.empty()) throw PreconditionError("etas must not be empty");
    const auto params = default_params(spec);
    if (params && std::none_of(etas.begin(), etas.end(), [&](double e) { return params->admissible(e, o->delta); }))
      throw PreconditionError(params->inadmissibility(etas.front(), o->delta));
    return "estimate P[sup|X_t - X_s| <= eta] for " + std::to_string(etas.size()) + " radii, " +
           std::to_string(o->replicates) + " paths of " + spec.describe();
  };
  cmd.execute = [o, &c] {
    const ProcessSpec spec = o->process.build();
    const auto etas = io::parse_double_list(o->etas);
    SmallBallOptions opts;
    opts.replicates = o->replicates;
    opts.dt = o->dt;
    opts.seed = c.seed;
    opts.exec = c.policy();
    const auto rows = small_ball_sweep(spec, o->s, o->delta, etas, opts);
    std::ostringstream csv;
    io::CsvWriter w(csv, {"s", "delta", "eta", "p_hat", "half_width", "bound", "admissible", "p_hat_refined",
                          "half_width_refined", "stable", "dominated"});
    Report rep;
    Json list = Json::array();
    std::size_t violations = 0, unstable = 0;
    for (const auto& r : rows) {
      const bool dominated = !r.analytic_bound || r.p_hat - 2.0 * r.half_width <= *r.analytic_bound;
      if (r.admissible && !dominated) ++violations;
      if (!r.refinement_stable) ++unstable;
      w.cell(r.s).cell(r.delta).cell(r.eta).cell(r.p_hat).cell(r.half_width);
      if (r.analytic_bound)
        w.cell(*r.analytic_bound);
      else
        w.cell(std::string_view{});
      w.cell(r.admissible).cell(r.p_hat_refined).cell(r.half_width_refined).cell(r.refinement_stable);
      w.cell(dominated).end_row();
      Json row{{"eta", r.eta}, {"p_hat", r.p_hat}, {"half_width", r.half_width},
               {"p_hat_refined", r.p_hat_refined}, {"stable", r.refinement_stable}, {"admissible", r.admissible}};
      row["bound"] = r.analytic_bound ? Json(*r.analytic_bound) : Json(nullptr);
      if (!r.note.empty()) row["note"] = r.note;
      list.push_back(row);
    }
    rep.csv = csv.str();
    rep.status = violations == 0 ? kExitPass : kExitAssertion;
    rep.summary = {{"process", spec.describe()}, {"delta", o->delta}, {"replicates", o->replicates},
                   {"dt", rows.empty() ? 0.0 : rows.front().dt}, {"rows", list},
                   {"violations", violations}, {"unstable_refinements", unstable},
                   {"pass", violations == 0}};
    rep.message = "smallball: " + std::to_string(rows.size()) + " radii, " + std::to_string(violations) +
                  " bound violation(s), " + pass_word(violations == 0);
    return rep;
  };
  return cmd;
}

Command check_a1_command(CLI::App& app, Common& c) {
  struct Opts {
    std::string function = "poly:0,0,1";
    double k = 0.0;
    double eta_star = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double lemma1_eta = 0.1;
    double growth = 0.0;
    double growth_range = 1000.0;
    int ineq5_d = 0;
    double eta0 = 1.0;
    double delta = 0.25;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("check-a1", "Check the lower-envelope and growth conditions for a function");
  add_common(cmd.app, c);
  value(cmd.app, "--function", o->function, "Function, e.g. poly:0,0,1 or x3sininv");
  number(cmd.app, "--k", o->k, "Exponent K, 0 for the declared value");
  number(cmd.app, "--eta-star", o->eta_star, "Threshold eta*, 0 for the declared value");
  number(cmd.app, "--lo", o->lo, "Range start (lo = hi = 0: built-in range)");
  number(cmd.app, "--hi", o->hi, "Range end");
  number(cmd.app, "--lemma1-eta", o->lemma1_eta, "Window width for the K2(eta) >= K(eta/2) check");
  number(cmd.app, "--growth", o->growth, "Derivative growth constant, 0 for the declared value");
  number(cmd.app, "--growth-range", o->growth_range, "Half width of the derivative-bound grid");
  value(cmd.app, "--ineq5-d", o->ineq5_d, "Derivative order for the derivative criterion, 0 to skip");
  number(cmd.app, "--eta0", o->eta0, "Window for the derivative criterion");
  number(cmd.app, "--delta", o->delta, "Level for the derivative criterion");
  auto resolve = [o] {
    FunctionSpec f = parse_function(o->function);
    double k = o->k, eta_star = o->eta_star;
    if (k <= 0.0 || eta_star <= 0.0) {
      if (!f.a1) throw PreconditionError(f.describe() + " has no declared (K, eta*); pass --k and --eta-star");
      if (k <= 0.0) k = f.a1->k;
      if (eta_star <= 0.0) eta_star = f.a1->eta_star;
    }
    Interval range = (o->lo == 0.0 && o->hi == 0.0) ? default_range(f) : Interval{o->lo, o->hi};
    if (!(range.hi > range.lo)) throw PreconditionError("range must satisfy lo < hi");
    return std::tuple{f, k, eta_star, range};
  };
  cmd.plan = [o, resolve] {
    auto [f, k, eta_star, range] = resolve();
    return "check K(eta) >= eta^" + io::format_double(k) + " on (0, " + io::format_double(eta_star) + ") for " +
           f.describe() + " over [" + io::format_double(range.lo) + ", " + io::format_double(range.hi) + "]";
  };
  cmd.execute = [o, resolve] {
    auto [f, k, eta_star, range] = resolve();
    const A1Report a1 = check_a1i(f, k, eta_star, range);
    const Lemma1Report l1 = check_lemma1_equivalences(f, o->lemma1_eta, range);
    std::ostringstream csv;
    io::CsvWriter w(csv, {"eta", "K_eta", "eta_pow_K"});
    for (std::size_t i = 0; i < a1.eta_grid.size(); ++i)
      w.cell(a1.eta_grid[i]).cell(a1.k_of_eta[i]).cell(std::pow(a1.eta_grid[i], k)).end_row();
    Report rep;
    rep.csv = csv.str();
    bool pass = a1.passes && l1.holds;
    rep.summary = {{"function", f.describe()}, {"k", k}, {"eta_star", eta_star},
                   {"range", {range.lo, range.hi}}, {"a1i", a1.passes}, {"witness_x", a1.witness_x},
                   {"lemma1", {{"eta", l1.eta}, {"k2", l1.k2}, {"k_half", l1.k_half}, {"holds", l1.holds}}}};
    const double growth = o->growth > 0.0 ? o->growth : f.growth_constant().value_or(0.0);
    if (growth > 0.0) {
      const bool ok = check_a1ii(f, growth, {-o->growth_range, o->growth_range});
      rep.summary["a1ii"] = {{"c0", growth}, {"holds", ok}};
      pass = pass && ok;
    }
    if (o->ineq5_d > 0) {
      const Ineq5Report r = check_ineq5(f, o->ineq5_d, o->eta0, o->delta, range);
      rep.summary["ineq5"] = {{"d", o->ineq5_d}, {"value", r.value}, {"holds", r.holds}};
      pass = pass && r.holds;
    }
    rep.summary["pass"] = pass;
    rep.status = pass ? kExitPass : kExitAssertion;
    rep.message = "check-a1: " + f.describe() + " " + pass_word(pass);
    return rep;
  };
  return cmd;
}

Command diverge_command(CLI::App& app, Common& c) {
  struct Opts {
    ProcessOpts process;
    std::string function = "poly:0,0,1";
    double epsilon = 0.5;
    double t0 = 1.0;
    int doublings = 9;
    std::size_t replicates = 100;
    double dt = 0.0;
    double required_fraction = 0.99;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("diverge", "Growth rate of the integral functional along dyadic horizons");
  add_common(cmd.app, c);
  add_process(cmd.app, o->process, "process", "ou");
  value(cmd.app, "--function", o->function, "Function f in the integrand f(X)^2");
  number(cmd.app, "--epsilon", o->epsilon, "Rate slack: T^(-1+epsilon) I_T should grow");
  number(cmd.app, "--t0", o->t0, "First horizon");
  value(cmd.app, "--doublings", o->doublings, "Number of horizon doublings");
  value(cmd.app, "--replicates", o->replicates, "Number of paths");
  number(cmd.app, "--dt", o->dt, "Grid step, 0 for the default");
  number(cmd.app, "--required-fraction", o->required_fraction, "Share of replicates that must grow");
  auto config = [o, &c] {
    DivergenceConfig cfg{o->process.build(), parse_function(o->function)};
    cfg.epsilon = o->epsilon;
    cfg.horizons = dyadic_horizons(o->t0, o->doublings);
    cfg.replicates = o->replicates;
    cfg.seed = c.seed;
    cfg.dt = o->dt;
    cfg.exec = c.policy();
    return cfg;
  };
  cmd.plan = [config] {
    const DivergenceConfig cfg = config();
    return "integrate " + cfg.f.describe() + "^2 along " + std::to_string(cfg.replicates) + " paths of " +
           cfg.spec.describe() + " up to T = " + io::format_double(cfg.horizons.back());
  };
  cmd.execute = [o, config] {
    const DivergenceConfig cfg = config();
    const DivergenceResult res = divergence_experiment(cfg);
    std::ostringstream csv;
    io::CsvWriter w(csv, {"T", "I_T", "replicate"});
    for (const auto& s : res.series)
      for (std::size_t k = 0; k < s.horizons.size(); ++k)
        w.cell(s.horizons[k]).cell(s.values[k]).cell(s.replicate).end_row();
    const double needed = o->required_fraction * static_cast<double>(cfg.replicates);
    const bool growing = static_cast<double>(res.increasing_count) >= needed - 1e-9;
    const bool rate = res.pooled.slope >= 1.0 - cfg.epsilon;
    std::vector<double> slopes;
    for (double s : res.replicate_slopes)
      if (std::isfinite(s)) slopes.push_back(s);
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"process", cfg.spec.describe()}, {"function", cfg.f.describe()}, {"epsilon", cfg.epsilon},
                   {"dt", res.dt}, {"slope", res.pooled.slope}, {"intercept", res.pooled.intercept},
                   {"r_squared", res.pooled.r_squared}, {"T_range", {res.pooled.t_lo, res.pooled.t_hi}},
                   {"ols_slope", res.pooled_ols.slope}, {"ols_r_squared", res.pooled_ols.r_squared},
                   {"replicate_slope_median", slopes.empty() ? Json(nullptr) : Json(stats::median(slopes))},
                   {"median_horizon", res.median_horizon}, {"final_horizon", res.final_horizon},
                   {"increasing", res.increasing_count}, {"replicates", cfg.replicates},
                   {"min_scaled", *std::min_element(res.min_scaled.begin(), res.min_scaled.end())},
                   {"slope_at_least_1_minus_epsilon", rate}, {"growing", growing}, {"pass", rate && growing}};
    rep.status = rate && growing ? kExitPass : kExitAssertion;
    rep.message = "diverge: slope " + io::format_double(res.pooled.slope) + ", r^2 " +
                  io::format_double(res.pooled.r_squared) + ", growing " + std::to_string(res.increasing_count) +
                  "/" + std::to_string(cfg.replicates) + ", " + pass_word(rate && growing);
    return rep;
  };
  return cmd;
}

Command selfsim_command(CLI::App& app, Common& c) {
  auto o = std::make_shared<SelfSimilarConfig>();
  Command cmd;
  cmd.app = app.add_subcommand("selfsim", "Normalised lower-bound experiment for fractional Brownian motion");
  add_common(cmd.app, c);
  number(cmd.app, "--hurst", o->hurst, "Hurst index");
  number(cmd.app, "--p", o->p, "Power p in |X|^p");
  number(cmd.app, "--epsilon", o->epsilon, "Slack, 0 < epsilon < pH");
  number(cmd.app, "--beta", o->beta, "Horizon exponent, beta > 1/(H - epsilon/p)");
  value(cmd.app, "--k-max", o->k_max, "Largest k (horizons k^beta for k in [k_max/2, k_max])");
  value(cmd.app, "--replicates", o->replicates, "Number of paths");
  number(cmd.app, "--dt", o->dt, "Grid step");
  auto config = [o, &c] {
    SelfSimilarConfig cfg = *o;
    cfg.seed = c.seed;
    cfg.exec = c.policy();
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < cfg.p * cfg.hurst))
      throw PreconditionError("selfsim: requires 0 < epsilon < p*H");
    if (!(cfg.beta > 1.0 / (cfg.hurst - cfg.epsilon / cfg.p)))
      throw PreconditionError("selfsim: requires beta > 1/(H - epsilon/p)");
    return cfg;
  };
  cmd.plan = [config] {
    const auto cfg = config();
    return "integrate |B^H|^" + io::format_double(cfg.p) + " up to k^beta = " +
           io::format_double(std::pow(static_cast<double>(cfg.k_max), cfg.beta)) + " for " +
           std::to_string(cfg.replicates) + " paths";
  };
  cmd.execute = [config] {
    const auto cfg = config();
    const SelfSimilarResult res = selfsimilar_lowerbound_experiment(cfg);
    std::ostringstream csv;
    io::CsvWriter w(csv, {"replicate", "k", "normalized"});
    for (std::size_t r = 0; r < res.normalized.size(); ++r)
      for (std::size_t j = 0; j < res.ks.size(); ++j)
        w.cell(static_cast<std::uint64_t>(r)).cell(res.ks[j]).cell(res.normalized[r][j]).end_row();
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"hurst", cfg.hurst}, {"p", cfg.p}, {"epsilon", cfg.epsilon}, {"beta", cfg.beta},
                   {"ks", res.ks}, {"min_over_replicates", *std::min_element(res.minima.begin(), res.minima.end())},
                   {"all_positive", res.all_positive}, {"growing", res.growing_count},
                   {"replicates", cfg.replicates}, {"unit_integral_variance", fbm_unit_integral_variance(cfg.hurst)},
                   {"pass", res.all_positive}};
    rep.status = res.all_positive ? kExitPass : kExitAssertion;
    rep.message = "selfsim: all minima positive: " + std::string(res.all_positive ? "yes" : "no") + ", " +
                  pass_word(res.all_positive);
    return rep;
  };
  return cmd;
}

Command ergodic_command(CLI::App& app, Common& c) {
  struct Opts {
    ProcessOpts process;
    std::string function = "poly:0,0,1";
    double horizon = 500.0;
    std::size_t replicates = 200;
    double dt = 0.0;
    double min_threshold = 0.0;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("ergodic", "Distribution of T^-1 I_T for a stationary process");
  add_common(cmd.app, c);
  add_process(cmd.app, o->process, "process", "ou");
  value(cmd.app, "--function", o->function, "Function f in the integrand f(X)^2");
  number(cmd.app, "--horizon", o->horizon, "Horizon T");
  value(cmd.app, "--replicates", o->replicates, "Number of paths");
  number(cmd.app, "--dt", o->dt, "Grid step, 0 for the default");
  number(cmd.app, "--min-threshold", o->min_threshold, "The minimum over replicates must exceed this");
  cmd.plan = [o] {
    const ProcessSpec spec = o->process.build();
    if (!spec.is_stationary()) throw PreconditionError("ergodic: " + spec.describe() + " is not stationary");
    return "average " + parse_function(o->function).describe() + "^2 over [0, " + io::format_double(o->horizon) +
           "] for " + std::to_string(o->replicates) + " paths of " + spec.describe();
  };
  cmd.execute = [o, &c] {
    const ProcessSpec spec = o->process.build();
    const FunctionSpec f = parse_function(o->function);
    const ErgodicSummary res = ergodic_limit(spec, f, o->horizon, o->replicates, c.seed, o->dt, c.policy());
    std::ostringstream csv;
    io::CsvWriter w(csv, {"replicate", "value"});
    for (std::size_t r = 0; r < res.values.size(); ++r) w.cell(static_cast<std::uint64_t>(r)).cell(res.values[r]).end_row();
    const bool pass = res.min > o->min_threshold;
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"process", spec.describe()}, {"function", f.describe()}, {"horizon", o->horizon},
                   {"mean", res.mean}, {"variance", res.variance}, {"min", res.min}, {"max", res.max},
                   {"replicates", o->replicates}, {"pass", pass}};
    rep.status = pass ? kExitPass : kExitAssertion;
    rep.message = "ergodic: mean " + io::format_double(res.mean) + ", min " + io::format_double(res.min) + ", " +
                  pass_word(pass);
    return rep;
  };
  return cmd;
}

Command estimate_ou_command(CLI::App& app, Common& c) {
  struct Opts {
    OUModelConfig model;
    std::size_t replicates = 100;
    double tolerance = 0.1;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("estimate-ou", "Drift estimator for the OU model with time-varying diffusion");
  add_common(cmd.app, c);
  number(cmd.app, "--theta", o->model.theta, "True drift");
  number(cmd.app, "--g-base", o->model.g.base, "Diffusion g(s) = base + amplitude sin(frequency s)");
  number(cmd.app, "--g-amplitude", o->model.g.amplitude, "Diffusion amplitude");
  number(cmd.app, "--g-frequency", o->model.g.frequency, "Diffusion frequency");
  number(cmd.app, "--y0", o->model.y0, "Initial value");
  number(cmd.app, "--horizon", o->model.horizon, "Horizon T");
  number(cmd.app, "--dt", o->model.dt, "Euler step");
  value(cmd.app, "--replicates", o->replicates, "Number of seeds");
  number(cmd.app, "--tolerance", o->tolerance, "Median |theta_hat - theta| must stay below this");
  cmd.plan = [o] {
    o->model.validate();
    return "estimate theta = " + io::format_double(o->model.theta) + " from " + std::to_string(o->replicates) +
           " Euler paths of " + std::to_string(o->model.steps()) + " steps";
  };
  cmd.execute = [o, &c] {
    const auto est = ou_estimates(o->model, o->replicates, c.seed, c.policy());
    std::ostringstream csv;
    io::CsvWriter w(csv, {"seed", "replicate", "theta_hat", "error"});
    for (std::size_t r = 0; r < est.size(); ++r)
      w.cell(c.seed).cell(static_cast<std::uint64_t>(r)).cell(est[r]).cell(est[r] - o->model.theta).end_row();
    const double med = median_abs_error(est, o->model.theta);
    const double gap = ou_half_step_gap(o->model, c.seed, 0);
    const bool pass = med < o->tolerance;
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"theta", o->model.theta}, {"horizon", o->model.horizon}, {"dt", o->model.dt},
                   {"median_abs_error", med}, {"theta_hat", quantiles(est)}, {"half_step_gap", gap},
                   {"replicates", o->replicates}, {"pass", pass}};
    rep.status = pass ? kExitPass : kExitAssertion;
    rep.message = "estimate-ou: median |error| " + io::format_double(med) + ", " + pass_word(pass);
    return rep;
  };
  return cmd;
}

Command estimate_frac_command(CLI::App& app, Common& c) {
  struct Opts {
    FracModelConfig model;
    ProcessOpts driver;
    std::string function = "poly:0,1";
    std::size_t replicates = 100;
    double tolerance = 0.15;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("estimate-frac", "Drift estimator for the fractional additive model");
  add_common(cmd.app, c);
  number(cmd.app, "--theta", o->model.theta, "True drift");
  number(cmd.app, "--hurst", o->model.hurst, "Hurst index of the driving noise");
  value(cmd.app, "--function", o->function, "f with g = f^2");
  add_process(cmd.app, o->driver, "driver", "ou");
  number(cmd.app, "--x0", o->model.x0, "Initial value X_0");
  number(cmd.app, "--horizon", o->model.horizon, "Horizon T");
  number(cmd.app, "--dt", o->model.dt, "Driver grid step, 0 for the default");
  number(cmd.app, "--epsilon", o->model.epsilon, "Exponent slack in the diagnostics");
  value(cmd.app, "--replicates", o->replicates, "Number of seeds");
  number(cmd.app, "--tolerance", o->tolerance, "Median |theta_hat - theta| must stay below this");
  auto config = [o] {
    FracModelConfig cfg = o->model;
    cfg.f = parse_function(o->function);
    cfg.driver = o->driver.build();
    cfg.validate();
    return cfg;
  };
  cmd.plan = [o, config] {
    const auto cfg = config();
    return "estimate theta = " + io::format_double(cfg.theta) + " from " + std::to_string(o->replicates) +
           " paths of " + cfg.driver.describe() + " with g = (" + cfg.f.describe() + ")^2";
  };
  cmd.execute = [o, config, &c] {
    const auto cfg = config();
    const auto est = frac_estimates(cfg, o->replicates, c.seed, c.policy());
    std::ostringstream csv;
    io::CsvWriter w(csv, {"seed", "replicate", "theta_hat", "error", "x0_term", "noise_term", "b_scaled",
                          "integral_scaled"});
    std::vector<double> theta_hat, x0_terms;
    for (std::size_t r = 0; r < est.size(); ++r) {
      const auto& e = est[r];
      w.cell(c.seed).cell(static_cast<std::uint64_t>(r)).cell(e.theta_hat).cell(e.theta_hat - cfg.theta);
      w.cell(e.x0_term).cell(e.noise_term).cell(e.b_scaled).cell(e.integral_scaled).end_row();
      theta_hat.push_back(e.theta_hat);
      x0_terms.push_back(std::abs(e.x0_term));
    }
    const double med = median_abs_error(theta_hat, cfg.theta);
    const bool pass = med < o->tolerance;
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"theta", cfg.theta}, {"hurst", cfg.hurst}, {"driver", cfg.driver.describe()},
                   {"function", cfg.f.describe()}, {"horizon", cfg.horizon}, {"median_abs_error", med},
                   {"theta_hat", quantiles(theta_hat)}, {"median_abs_x0_term", stats::median(x0_terms)},
                   {"replicates", o->replicates}, {"pass", pass}};
    rep.status = pass ? kExitPass : kExitAssertion;
    rep.message = "estimate-frac: median |error| " + io::format_double(med) + ", " + pass_word(pass);
    return rep;
  };
  return cmd;
}

Command oracle_command(CLI::App& app, Common& c) {
  struct Opts {
    std::string lemma = "a3";
    double hurst = 0.75;
    double x = 1.0;
    double y = 0.0;
    std::string ps = "0.001,0.01,0.1,1,10,100,1000";
    double z = 1.2;
    double x0 = 0.1;
    int levels = 5;
    double tolerance = 1e-3;
  };
  auto o = std::make_shared<Opts>();
  Command cmd;
  cmd.app = app.add_subcommand("oracle", "Quadrature and closed-form reference values");
  add_common(cmd.app, c);
  value(cmd.app, "--lemma", o->lemma, "a1, a2, a3, i0 or gamma")
      ->check(CLI::IsMember({"a1", "a2", "a3", "i0", "gamma"}));
  number(cmd.app, "--hurst", o->hurst, "Hurst index in (1/2, 1)");
  number(cmd.app, "--x", o->x, "Upper limit x (a1)");
  number(cmd.app, "--y", o->y, "Singular point y (a1)");
  value(cmd.app, "--ps", o->ps, "Shifts p (a2)");
  number(cmd.app, "--z", o->z, "Argument (gamma)");
  number(cmd.app, "--x0", o->x0, "Largest x of the extrapolation sequence (a3)");
  value(cmd.app, "--levels", o->levels, "Number of halvings (a3)");
  number(cmd.app, "--tolerance", o->tolerance, "Allowed distance from the reference (a3)");
  cmd.plan = [o] { return "evaluate oracle " + o->lemma + " at H = " + io::format_double(o->hurst); };
  cmd.execute = [o] {
    Report rep;
    std::ostringstream csv;
    const double a = 2.0 * o->hurst - 1.0;
    if (o->lemma == "a1") {
      const auto r = oracles::lemma_a1_integral(o->hurst, o->x, o->y);
      io::CsvWriter w(csv, {"x", "y", "closed_form", "quadrature", "abs_error", "bound"});
      w.cell(o->x).cell(o->y).cell(r.closed_form).cell(r.quadrature.value).cell(r.quadrature.abs_error_estimate);
      w.cell(r.bound).end_row();
      const bool agree = std::abs(r.closed_form - r.quadrature.value) <= 1e-8 + 10.0 * r.quadrature.abs_error_estimate;
      rep.status = agree && r.within_bound ? kExitPass : kExitAssertion;
      rep.summary = {{"closed_form", r.closed_form}, {"quadrature", r.quadrature.value},
                     {"abs_error", r.quadrature.abs_error_estimate}, {"bound", r.bound},
                     {"within_bound", r.within_bound}, {"agree", agree}};
      rep.message = io::format_double(r.closed_form) + " (quadrature " + io::format_double(r.quadrature.value) + ")";
    } else if (o->lemma == "a2") {
      io::CsvWriter w(csv, {"p", "value", "abs_error"});
      Json rows = Json::array();
      for (double p : io::parse_double_list(o->ps)) {
        const auto r = oracles::lemma_a2_i5(o->hurst, p);
        w.cell(p).cell(r.value).cell(r.abs_error_estimate).end_row();
        rows.push_back({{"p", p}, {"value", r.value}, {"abs_error", r.abs_error_estimate}});
      }
      rep.summary = {{"hurst", o->hurst}, {"rows", rows}, {"gamma_2h_minus_1", oracles::gamma_function(a)}};
      rep.message = "a2: " + std::to_string(rows.size()) + " shifts evaluated";
    } else if (o->lemma == "a3") {
      const auto r = oracles::lemma_a3_limit(o->hurst, o->x0, o->levels);
      io::CsvWriter w(csv, {"x", "ratio", "series"});
      for (std::size_t i = 0; i < r.xs.size(); ++i)
        w.cell(r.xs[i]).cell(r.ratios[i]).cell(oracles::lemma_a3_series(o->hurst, r.xs[i])).end_row();
      const bool pass = std::abs(r.limit - r.reference) <= o->tolerance;
      rep.status = pass ? kExitPass : kExitAssertion;
      rep.summary = {{"hurst", o->hurst}, {"limit", r.limit}, {"error_estimate", r.error_estimate},
                     {"reference", r.reference}, {"pass", pass}};
      rep.message = io::format_double(r.limit) + " +/- " + io::format_double(r.error_estimate) +
                    " (Gamma(2H-1) = " + io::format_double(r.reference) + ")";
    } else if (o->lemma == "i0") {
      const auto r = oracles::lemma_a2_i5(o->hurst, 0.0);
      const double ref = oracles::gamma_function(a);
      io::CsvWriter w(csv, {"hurst", "quadrature", "gamma"});
      w.cell(o->hurst).cell(r.value).cell(ref).end_row();
      const bool pass = std::abs(r.value - ref) <= 1e-6;
      rep.status = pass ? kExitPass : kExitAssertion;
      rep.summary = {{"hurst", o->hurst}, {"quadrature", r.value}, {"abs_error", r.abs_error_estimate},
                     {"gamma", ref}, {"pass", pass}};
      rep.message = io::format_double(r.value) + " (Gamma(2H-1) = " + io::format_double(ref) + ")";
    } else {
      const double g = oracles::gamma_function(o->z);
      io::CsvWriter w(csv, {"z", "value"});
      w.cell(o->z).cell(g).end_row();
      rep.summary = {{"z", o->z}, {"value", g}};
      rep.message = io::format_double(g);
    }
    rep.csv = csv.str();
    return rep;
  };
  return cmd;
}

// ---------------------------------------------------------------- driver

std::vector<std::string> expand_config(const std::vector<std::string>& args, const std::set<std::string>& commands) {
  std::vector<std::string> rest;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config requires a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  std::string command;
  auto it = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) { return commands.count(a) > 0; });
  if (it != rest.end()) {
    command = *it;
    rest.erase(it);
  }
  std::vector<std::string> from_file;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw CLI::FileError::Missing(*path);
    std::stringstream text;
    text << in.rdbuf();
    for (const auto& [key, val] : read_config(text.str())) {
      if (key == "command") {
        if (command.empty()) command = val;
        continue;
      }
      from_file.push_back("--" + key);
      from_file.push_back(val);
    }
  }
  std::vector<std::string> out;
  if (!command.empty()) out.push_back(command);
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string_view version() { return SMALLBALL_VERSION; }

std::vector<std::pair<std::string, std::string>> read_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = CLI::detail::trim_copy(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ConversionError("config line " + std::to_string(number) + ": expected key=value");
    out.emplace_back(CLI::detail::trim_copy(line.substr(0, eq)), CLI::detail::trim_copy(line.substr(eq + 1)));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Small-ball probabilities, integral functionals and drift estimators"};
  app.set_version_flag("--version", std::string(SMALLBALL_VERSION));
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "Flat key=value file; explicit arguments override it");

  Common common;
  std::vector<Command> commands;
  commands.push_back(simulate_command(app, common));
  commands.push_back(smallball_command(app, common));
  commands.push_back(check_a1_command(app, common));
  commands.push_back(diverge_command(app, common));
  commands.push_back(selfsim_command(app, common));
  commands.push_back(ergodic_command(app, common));
  commands.push_back(estimate_ou_command(app, common));
  commands.push_back(estimate_frac_command(app, common));
  commands.push_back(oracle_command(app, common));
  std::set<std::string> names;
  for (const auto& cmd : commands) names.insert(cmd.app->get_name());

  try {
    auto expanded = expand_config(args, names);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  const auto chosen = std::find_if(commands.begin(), commands.end(), [](const Command& c) { return c.app->parsed(); });
  Command& cmd = *chosen;
  try {
    if (const char* env = std::getenv("SMALLBALL_SEED"); env && *env) common.seed = std::stoull(env);
  } catch (const std::exception&) {
    err << "SMALLBALL_SEED must be a non-negative integer\n";
    return kExitUsage;
  }
  set_threads(common.threads);
  const std::string name = common.name.empty() ? cmd.app->get_name() : common.name;
  const std::string resolved = manifest(cmd.app, common);

  try {
    const std::string plan = cmd.plan();
    if (common.dry_run) {
      out << "plan: " << plan << "\n" << resolved;
      return kExitPass;
    }
    const Report rep = cmd.execute();
    const fs::path dir(common.output);
    fs::create_directories(dir);
    write_file(dir / (name + ".csv"), rep.csv);
    Json summary = rep.summary;
    summary["command"] = cmd.app->get_name();
    summary["seed"] = common.seed;
    summary["version"] = std::string(SMALLBALL_VERSION);
    write_file(dir / (name + ".summary.json"), summary.dump(2) + "\n");
    write_file(dir / (name + ".manifest"), resolved);
    out << rep.message << "\n";
    return rep.status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace smallball::cli
