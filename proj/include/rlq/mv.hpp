#pragma once

// Terminal-wealth statistics under the equilibrium measure and frontier sweeps.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rlq/baseline.hpp"
#include "rlq/equilibrium.hpp"
#include "rlq/model.hpp"

namespace rlq {

struct TerminalStats {
  double mean = 0.0;
  double variance = 0.0;
  /// int_0^T (A + (B + h)'alpha) and int_0^T |alpha|^2.
  double drift_integral = 0.0;
  double alpha2_integral = 0.0;

  double std_dev() const;
};

/// mean = x0 exp(int (A + (B + h)'alpha)),
/// var  = x0^2 exp(2 int (A + (B + h)'alpha)) (exp(int |alpha|^2) - 1),
/// trapezoid on the grid. An empty `h` means h = 0.
TerminalStats terminal_stats(const std::vector<Eigen::VectorXd>& alpha, const std::vector<Eigen::VectorXd>& h,
                             const ModelSpec& spec, const TimeGrid& grid);
TerminalStats terminal_stats(const Policy& policy, const ModelSpec& spec, const TimeGrid& grid);
TerminalStats terminal_stats(const BaselinePath& path, const ModelSpec& spec, const TimeGrid& grid);

enum class RowStatus { Ok, Degenerate, SolverFailure };
const char* to_string(RowStatus s) noexcept;

struct FrontierPoint {
  double swept = 0.0;
  double mu1 = 0.0;
  double xi = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  Eigen::VectorXd alpha0;
  RowStatus status = RowStatus::Ok;
  std::string message;
};

/// How xi follows mu1 in a relation sweep.
struct Relation {
  enum class Form { Linear, Quadratic } form = Form::Linear;
  double a0 = 0.0;
  double a1 = 0.0;

  double xi(double mu1) const noexcept { return form == Form::Linear ? a0 + a1 * mu1 : a1 * mu1 * mu1; }
};

/// Vary mu1 with xi fixed. Rows keep input order; failures are recorded per row.
std::vector<FrontierPoint> sweep_risk(const ModelSpec& spec, const TimeGrid& grid, const std::vector<double>& mu1);
/// Vary xi with mu1 fixed; every xi must be positive.
std::vector<FrontierPoint> sweep_ambiguity(const ModelSpec& spec, const TimeGrid& grid, const std::vector<double>& xi);
/// Vary mu1 with xi = relation.xi(mu1).
std::vector<FrontierPoint> relation_sweep(const ModelSpec& spec, const TimeGrid& grid, const Relation& relation,
                                          const std::vector<double>& mu1);

/// Worker count for sweeps: RLQ_THREADS if set (0 = run inline), else the
/// hardware concurrency.
std::size_t sweep_threads();

/// Parses "a:b:step" (inclusive when step divides b - a to round-off) or a
/// single number.
std::vector<double> parse_range(const std::string& text);

}  // namespace rlq
