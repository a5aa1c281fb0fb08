#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rlq/model.hpp"
#include "rlq/odeint.hpp"

namespace rlq {

/// Ansatz coefficients of the first-order adjoints at one time point.
struct CoeffValues {
  double L = 0.0;
  double H = 0.0;
  double F = 0.0;
  double M = 0.0;
  double N = 0.0;
  double Gamma = 0.0;

  double delta() const noexcept { return M - N - Gamma; }
  double e() const noexcept { return 2.0 * L - H - F; }

  ode::State<6> pack() const noexcept { return {L, H, F, M, N, Gamma}; }
  static CoeffValues unpack(const ode::State<6>& y) noexcept { return {y[0], y[1], y[2], y[3], y[4], y[5]}; }
};

/// L = G/2, H = nu, F = mu1, M = G, N = nu, Gamma = mu1.
CoeffValues terminal_values(const ModelSpec& spec) noexcept;

struct CoeffPath {
  std::vector<double> t;
  std::vector<CoeffValues> values;
};

/// Equilibrium pair per node plus second-order diagnostics.
struct Policy {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> alpha;
  std::vector<Eigen::VectorXd> h;
  std::vector<double> p_tt;
  /// Smallest eigenvalue of Sigma(t;t).
  std::vector<double> sigma_min;
};

struct SolveResult {
  Mode mode = Mode::StateDep;
  CoeffPath coeffs;
  Policy policy;
  /// Smallest |alpha_j| over nodes and components.
  double min_abs_alpha = 0.0;
  std::vector<std::string> notes;
};

/// Dispatches on spec.mode. Throws ValidationError for inadmissible specs.
SolveResult solve(const ModelSpec& spec, const TimeGrid& grid);
inline SolveResult solve(const ModelSpec& spec) { return solve(spec, spec.grid()); }

/// Solution of y' = -rate y - source, y(T) = terminal, through
/// y(t) = terminal e^{int_t^T rate} + int_t^T e^{int_t^u rate} source(u) du
/// with trapezoid quadrature on node samples. The exponent integral is
/// accumulated once from T backward.
std::vector<double> linear_backward_closed_form(const TimeGrid& grid, const std::vector<double>& rate,
                                                const std::vector<double>& source, double terminal);

/// Diagonal second-order adjoint P(t;t) along the grid:
///
///   P(t;t) = g e^{K(t)} + int_t^T e^{K(t) - K(v)} (Q_v - w |h_v|^2) dv,
///   K(t) = int_t^T (2A + 2C'h + |C|^2) du,
///
/// with composite-trapezoid quadrature on the grid. `terminal_weight` is G or
/// G - nu and `penalty_weight` is xi for state-dependent ambiguity, 0 otherwise.
std::vector<double> p_second_order(const ModelSpec& spec, const TimeGrid& grid, const std::vector<Eigen::VectorXd>& h,
                                   double terminal_weight, double penalty_weight);

/// One certificate inequality, reduced to its most binding node.
struct Margin {
  std::string name;
  /// Smallest slack over the grid; non-negative means satisfied.
  double slack = 0.0;
  std::size_t node = 0;
  double t = 0.0;

  bool ok() const noexcept;
};

/// Evaluated well-posedness conditions for one spec and constant set.
struct Certificate {
  Mode mode = Mode::StateDep;
  bool verdict = false;
  std::map<std::string, double> constants;
  std::vector<Margin> margins;
  std::vector<double> t;
  std::map<std::string, std::vector<double>> envelopes;

  const Margin& margin(const std::string& name) const;
  /// Names of the failed margins, in evaluation order.
  std::vector<std::string> failures() const;
};

/// Tracks the minimum of `value` over nodes for one named inequality.
class MarginTracker {
 public:
  explicit MarginTracker(std::string name) { m_.name = std::move(name); }
  void observe(double slack, std::size_t node, double t);
  const Margin& result() const noexcept { return m_; }

 private:
  Margin m_;
  bool seen_ = false;
};

/// Dispatches to the mode's certificate with default constants.
Certificate certify(const ModelSpec& spec, const TimeGrid& grid);

/// Bisects on the horizon between `t_pass` (certificate holds) and `t_fail`
/// (it does not), keeping spec.steps per horizon. Returns the last passing T.
/// Throws ValidationError when the bracket does not straddle a change.
double certified_horizon(ModelSpec spec, double t_pass, double t_fail, int iterations = 30);

nlohmann::json to_json(const Certificate& cert);
nlohmann::json to_json(const SolveResult& result);

}  // namespace rlq
