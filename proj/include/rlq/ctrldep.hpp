#pragma once

// Equilibrium under control-dependent ambiguity aversion, penalty xi2 l |u_j|^2.
// C vanishes and D, R are scalars times the identity; l equals the number of drivers.

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "rlq/equilibrium.hpp"
#include "rlq/model.hpp"

namespace rlq::ctrldep {

/// kappa alpha_j^2 + beta_j alpha_j + gamma = 0 per component.
struct QuadCoeffs {
  double kappa = 0.0;
  Eigen::VectorXd beta;
  double gamma = 0.0;
};

/// kappa = D^2 M + R, beta_j = B_j Delta, gamma = D^2 (Delta E - E^2) / (xi2 l).
QuadCoeffs quad_coeffs(double M, double delta, double E, double D, double R, const Eigen::VectorXd& B, double xi,
                       double l);

/// Root continuous with the nonzero terminal root -beta/kappa:
/// (-beta - sign(beta) sqrt(beta^2 - 4 kappa gamma)) / (2 kappa).
///
/// `prev` is the root at the later neighbouring node and only matters when
/// beta_j = 0. `terminal` makes beta_j = 0 an error. Discriminants down to
/// -1e-12 are clamped to zero. `near_zero_beta` is set when some |beta_j| < 1e-10.
Eigen::VectorXd alpha(const QuadCoeffs& q, const Eigen::VectorXd* prev, bool terminal, std::ptrdiff_t node = -1,
                      bool* near_zero_beta = nullptr);

/// h_j = E D / (xi2 l alpha_j). A zero alpha_j raises DegenerateCase.
Eigen::VectorXd h(const Eigen::VectorXd& alpha, double E, double D, double xi, double l, std::ptrdiff_t node = -1);

/// Time derivatives of (L, H, F, M, N, Gamma) given the node's alpha*.
CoeffValues rhs(const NodeCoeffs& c, const CoeffValues& y, const Eigen::VectorXd& alpha, double xi);

/// Gamma(t) = mu1 exp(int_t^T A), trapezoid on the grid.
std::vector<double> gamma_closed_form(const ModelSpec& spec, const TimeGrid& grid);

/// Refuses mu1 = 0 with DegenerateCase (h* would divide by alpha* = 0).
SolveResult solve(const ModelSpec& spec, const TimeGrid& grid);

struct Constants {
  double m_lo = 0.0;
  double m_hi = 0.0;
  double delta_hi = 0.0;
  double e_hi = 0.0;
  /// Lower bound for |alpha*_j|; non-positive means "half the solved minimum".
  double phi = 0.0;
};

/// eps0 = min{1/2, 1 - 1/(l xi2 B^2), mu1 |B| / 2, l xi2 B^2 - 1} with the
/// smallest |B| on the grid; m = G(1 -+ eps0), delta_hi = mu1 exp(int_0^T A),
/// e_hi = mu1 + eps0 G, phi from the solve. Throws ValidationError unless l xi2 B^2 > 1.
Constants default_constants(const ModelSpec& spec, const TimeGrid& grid);

/// Throws ValidationError naming the first violated ordering constraint.
void check_constants(const ModelSpec& spec, const TimeGrid& grid, const Constants& k);

/// Evaluates the envelopes, the discriminant condition, Sigma_j(t;t) >= 0 and
/// min |alpha*| >= phi.
Certificate certify(const ModelSpec& spec, const TimeGrid& grid, const std::optional<Constants>& constants = std::nullopt,
                    const SolveResult* solved = nullptr);

}  // namespace rlq::ctrldep
