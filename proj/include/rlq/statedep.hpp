#pragma once

// Equilibrium under state-dependent ambiguity aversion, penalty xi1 X^2.

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "rlq/equilibrium.hpp"
#include "rlq/model.hpp"

namespace rlq::statedep {

/// alpha* = -[R + (M + Delta E/xi) D'D]^{-1} [(M + Delta E/xi) D'C + B Delta].
///
/// The matrix is factorized with LDL'; a reciprocal condition estimate below
/// 1e-12 raises SolverError tagged with `node`.
Eigen::VectorXd alpha(const NodeCoeffs& c, double M, double delta, double E, double xi, std::ptrdiff_t node = -1);

/// h* = (E / xi)(C + D alpha*), componentwise for diagonal D.
Eigen::VectorXd h(const Eigen::VectorXd& alpha, double E, const NodeCoeffs& c, double xi);

/// Time derivatives of (L, H, F, M, N, Gamma) with h* eliminated.
CoeffValues rhs(const NodeCoeffs& c, const CoeffValues& y, double xi);

/// Integrates the coefficient system backward from its terminal values and
/// fills alpha*, h*, P(t;t) and min eig Sigma(t;t) = R + D'P(t;t)D per node.
SolveResult solve(const ModelSpec& spec, const TimeGrid& grid);

/// Truncation constants (m_lo, m_hi, delta_lo, e_lo).
struct Constants {
  double m_lo = 0.0;
  double m_hi = 0.0;
  double delta_lo = 0.0;
  double e_lo = 0.0;
};

/// eps0 = min(1/2, mu1); m = G(1 -+ eps0); delta_lo = e_lo = (G - nu - mu1) - eps0 G.
Constants default_constants(const ModelSpec& spec);

/// Throws ValidationError naming the first violated ordering constraint.
void check_constants(const ModelSpec& spec, const Constants& k);

/// Evaluates the comparison envelopes and all well-posedness inequalities.
/// `solved` supplies P(t;t); it is computed when absent.
Certificate certify(const ModelSpec& spec, const TimeGrid& grid, const std::optional<Constants>& constants = std::nullopt,
                    const SolveResult* solved = nullptr);

}  // namespace rlq::statedep
