#pragma once

// Non-robust mean-variance equilibria (no ambiguity aversion), used as the
// xi -> infinity reference and for frontier comparisons.

#include <vector>

#include <Eigen/Dense>

#include "rlq/model.hpp"

namespace rlq {

enum class BaselineKind { OpenLoop, ClosedLoop };

const char* to_string(BaselineKind kind) noexcept;

struct BaselinePath {
  BaselineKind kind = BaselineKind::OpenLoop;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> alpha;
};

/// alpha_t = mu1 e^{-int_t^T A} B_t / (1 + mu1 int_t^T e^{-int_s^T A} |B_s|^2 ds),
/// trapezoid quadrature on the grid.
BaselinePath open_loop_nonrobust(const ModelSpec& spec, const TimeGrid& grid);

/// Feedback equilibrium alpha_t = B_t (-1 + e^{-y1} + mu1 e^{-y2}) where
/// y1 = int_t^T |alpha|^2 and y2 = int_t^T (A + B'alpha + |alpha|^2) are
/// carried as a backward RK4 system with y(T) = 0.
BaselinePath closed_loop_nonrobust(const ModelSpec& spec, const TimeGrid& grid);

BaselinePath baseline(const ModelSpec& spec, const TimeGrid& grid, BaselineKind kind);

}  // namespace rlq
