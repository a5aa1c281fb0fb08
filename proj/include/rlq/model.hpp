#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rlq {

/// Deterministic coefficient: a constant, or piecewise-linear knots over [0, T].
class Schedule {
 public:
  using Knot = std::pair<double, double>;

  Schedule() = default;
  explicit Schedule(double value) : constant_(value) {}
  static Schedule table(std::vector<Knot> knots);

  bool is_constant() const noexcept { return knots_.empty(); }
  const std::vector<Knot>& knots() const noexcept { return knots_; }

  /// Value at t. Tables reject t outside [first knot, last knot].
  double at(double t) const;

  /// True when every knot (or the constant) is exactly zero.
  bool is_identically_zero() const noexcept;

  /// Smallest and largest value taken; exact for piecewise-linear data.
  double min_value() const noexcept;
  double max_value() const noexcept;

  bool operator==(const Schedule&) const = default;

 private:
  double constant_ = 0.0;
  std::vector<Knot> knots_;
};

enum class Mode { StateDep, CtrlDep };

const char* to_string(Mode mode) noexcept;

/// Uniform grid t_k = k T / steps, k = 0..steps.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double operator[](std::size_t k) const noexcept {
    return k == steps_ ? horizon_ : horizon_ * static_cast<double>(k) / static_cast<double>(steps_);
  }

 private:
  double horizon_;
  std::size_t steps_;
};

/// Model and preference coefficients for the one-dimensional wealth problem.
///
/// `d` is both the number of Brownian drivers and the control dimension. The
/// control loading is diagonal: driver j carries D_j on control component j.
/// In control-dependent mode all D_j must coincide and C must vanish.
struct ModelSpec {
  Mode mode = Mode::StateDep;
  std::size_t d = 1;
  double T = 1.0;
  std::size_t steps = 2000;
  double x0 = 1.0;
  Schedule A{0.0};
  std::vector<Schedule> B{Schedule{0.0}};
  std::vector<Schedule> C{Schedule{0.0}};
  std::vector<Schedule> D{Schedule{1.0}};
  Schedule Q{0.0};
  Schedule R{0.0};
  double G = 1.0;
  double nu = 1.0;
  double mu1 = 0.0;
  double xi = 1.0;

  TimeGrid grid() const { return TimeGrid(T, steps); }
  bool c_is_zero() const noexcept;

  /// Reference benchmark: A = 0.02, B = 0.375, D = 1, G = nu = 1,
  /// mu1 = 2, xi = 10, T = 1, x0 = 1, Q = R = C = 0.
  static ModelSpec benchmark(Mode mode = Mode::StateDep);
};

struct Violation {
  std::string field;
  std::optional<std::size_t> node;
  std::string message;

  std::string describe() const;
};

/// Every violated admissibility condition, in field order. Empty iff admissible.
std::vector<Violation> validate(const ModelSpec& spec);

/// Coefficients evaluated at one time point.
struct NodeCoeffs {
  double t = 0.0;
  double A = 0.0;
  Eigen::VectorXd B;
  Eigen::VectorXd C;
  Eigen::VectorXd D;
  double Q = 0.0;
  double R = 0.0;
};

/// Evaluates every schedule at t. Throws ValidationError for t outside [0, T].
NodeCoeffs coeffs_at(const ModelSpec& spec, double t);

/// coeffs_at for each node of `grid`.
std::vector<NodeCoeffs> sample(const ModelSpec& spec, const TimeGrid& grid);

}  // namespace rlq
