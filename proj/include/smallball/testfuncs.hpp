#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smallball {

enum class FunctionKind { Poly, TrigCombo, Rational, X3SinInv, PeriodicSinCluster, AbsPow, Custom };

std::string_view to_string(FunctionKind kind);

/// Declared constants of the lower-bound condition K(η) >= η^K on (0, η*).
struct A1Params {
  double k = 1.0;
  double eta_star = 1.0;
};

/// Declared constants of |f(x)| >= Q |x|^p for |x| >= C.
struct A1iiiParams {
  double q = 1.0;
  double p = 1.0;
  double c = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A test function with closed-form value and derivatives.
///  - Poly: coeffs c_0..c_m (ascending powers).
///  - TrigCombo: quadruples (a, α, b, β): Σ a sin(αx) + b cos(βx).
///  - Rational: coeffs / denominator, both ascending polynomials.
///  - X3SinInv: x^3 sin(1/x), 0 at x = 0.
///  - PeriodicSinCluster: sin(x)^3 sin(1/sin x), 0 on πZ.
///  - AbsPow: |x|^p with p = coeffs[0] > 1.
///  - Custom: pairs (c, r): Σ c e^{r x}.
class FunctionSpec {
 public:
  static FunctionSpec poly(std::vector<double> coeffs);
  static FunctionSpec constant(double c);
  static FunctionSpec trig(std::vector<double> quadruples);
  static FunctionSpec rational(std::vector<double> numerator, std::vector<double> denominator);
  static FunctionSpec x3_sin_inv();
  static FunctionSpec periodic_sin_cluster();
  static FunctionSpec abs_pow(double p);
  static FunctionSpec exp_sum(std::vector<double> pairs);

  FunctionKind kind() const { return kind_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<const double> denominator() const { return denominator_; }

  double value(double x) const;
  /// order-th derivative; throws PreconditionError above max_derivative_order().
  double derivative(double x, int order = 1) const;
  int max_derivative_order() const;

  /// Period for the kinds whose infimum over R reduces to one period.
  std::optional<double> period() const;

  /// C0 with |f'(x)| <= C0 (1 + |x|)^C0, when f has polynomial growth.
  std::optional<double> growth_constant() const;

  std::optional<A1Params> a1;
  std::optional<A1iiiParams> a1iii;

  /// Text form accepted by parse_function.
  std::string describe() const;

 private:
  FunctionSpec(FunctionKind kind, std::vector<double> coeffs);
  FunctionKind kind_;
  std::vector<double> coeffs_;
  std::vector<double> denominator_;
};

/// Parses "poly:0,0,1", "const:1", "trig:1,1,1,1", "rational:1,0,0,1|1,0,1",
/// "x3sininv", "sincluster", "abspow:1.5", "exp:1,1". Built-in kinds carry
/// their declared A1 constants.
FunctionSpec parse_function(std::string_view text);

struct GridOptions {
  std::size_t window_points = 512;  // grid steps per window of width η
  int max_doublings = 5;
  double tolerance = 0.01;           // relative change that stops refinement
  std::size_t max_grid_points = std::size_t{1} << 23;
};

struct WindowInf {
  double value = 0.0;    // inf over windows of sup |f|
  double witness = 0.0;  // left end of the minimising window
  double step = 0.0;     // grid step used
  bool converged = false;
};

/// K(η) = inf_x min over H± of sup_{y in H±(x, η)} |f(y)| with x in range.
WindowInf lower_envelope_k(const FunctionSpec& f, double eta, Interval range,
                           const GridOptions& grid = {});

struct A1Report {
  std::vector<double> eta_grid;
  std::vector<double> k_of_eta;
  bool passes = false;
  double witness_x = 0.0;  // window of the worst margin K(η) - η^K
  double k = 0.0;
  double eta_star = 0.0;
};

/// Checks K(η) >= η^K on the eta grid (default: 8 geometric points in
/// [η*/16, 15η*/16]). Throws GridTooCoarse when the grid cannot resolve f.
A1Report check_a1i(const FunctionSpec& f, double k, double eta_star, Interval range,
                   std::span<const double> eta_grid = {}, const GridOptions& grid = {});

struct Lemma1Report {
  double eta = 0.0;
  double k_half = 0.0;  // K(η/2)
  double k2 = 0.0;      // inf_x sup over the open window (x, x+η)
  bool holds = false;   // k2 >= k_half
};

/// K2(η) and K(η/2) on one shared grid; the open window of width η contains
/// a closed window of width η/2, so the relation is exact on the grid.
Lemma1Report check_lemma1_equivalences(const FunctionSpec& f, double eta, Interval range,
                                       std::size_t window_points = 1024);

struct Ineq5Report {
  bool holds = false;
  double value = 0.0;    // inf_x max_i inf_{[x, x+η0]} |f^(i)|
  double witness = 0.0;
  std::optional<A1Report> constructive;  // check_a1i with the constructive constants
  double k = 0.0;
  double eta_star = 0.0;
};

Ineq5Report check_ineq5(const FunctionSpec& f, int d, double eta0, double delta, Interval range,
                        std::size_t window_points = 512);

/// |f(x)| >= Q |x|^p on a grid over range ∩ {|x| >= C}.
bool check_a1iii(const FunctionSpec& f, double q, double p, double c, Interval range,
                 std::size_t points = 200001);

/// |f'(x)| <= C0 (1 + |x|)^C0 on a uniform grid over range.
bool check_a1ii(const FunctionSpec& f, double c0, Interval range, std::size_t points = 200001);

/// Range used to approximate the infimum over R for a built-in function.
Interval default_range(const FunctionSpec& f);

}  // namespace smallball
