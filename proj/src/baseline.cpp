#include "rlq/baseline.hpp"

#include <cmath>

#include "rlq/errors.hpp"
#include "rlq/odeint.hpp"

namespace rlq {

namespace {

void require_valid(const ModelSpec& spec) {
  for (const auto& v : validate(spec)) {
    // The baselines ignore the ambiguity mode, so mode-only constraints do not apply.
    if (v.message.find("CtrlDep") != std::string::npos || v.message.find("G >= nu") != std::string::npos) continue;
    throw ValidationError(v.describe());
  }
}

}  // namespace

const char* to_string(BaselineKind kind) noexcept { return kind == BaselineKind::OpenLoop ? "open" : "closed"; }

BaselinePath open_loop_nonrobust(const ModelSpec& spec, const TimeGrid& grid) {
  require_valid(spec);
  const std::vector<NodeCoeffs> c = sample(spec, grid);
  const std::size_t n = grid.steps();
  const double dt = grid.dt();

  BaselinePath out;
  out.kind = BaselineKind::OpenLoop;
  out.t.resize(n + 1);
  out.alpha.resize(n + 1);
  double K = 0.0;  // int_t^T A
  double S = 0.0;  // int_t^T e^{-int_s^T A} |B_s|^2 ds
  double prev = c[n].B.squaredNorm();
  for (std::size_t k = n + 1; k-- > 0;) {
    if (k < n) {
      K += 0.5 * dt * (c[k].A + c[k + 1].A);
      const double cur = std::exp(-K) * c[k].B.squaredNorm();
      S += 0.5 * dt * (cur + prev);
      prev = cur;
    }
    out.t[k] = grid[k];
    out.alpha[k] = spec.mu1 * std::exp(-K) * c[k].B / (1.0 + spec.mu1 * S);
  }
  return out;
}

BaselinePath closed_loop_nonrobust(const ModelSpec& spec, const TimeGrid& grid) {
  require_valid(spec);
  auto closure = [&](const Eigen::VectorXd& B, const ode::State<2>& y) -> Eigen::VectorXd {
    return B * (-1.0 + std::exp(-y[0]) + spec.mu1 * std::exp(-y[1]));
  };
  const ode::Rhs<2> f = [&](double t, const ode::State<2>& y) {
    const NodeCoeffs c = coeffs_at(spec, t);
    const Eigen::VectorXd a = closure(c.B, y);
    const double a2 = a.squaredNorm();
    return ode::State<2>{-a2, -(c.A + c.B.dot(a) + a2)};
  };
  const auto path = ode::integrate_backward<2>(f, {0.0, 0.0}, grid);

  BaselinePath out;
  out.kind = BaselineKind::ClosedLoop;
  out.t.resize(grid.size());
  out.alpha.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.t[k] = grid[k];
    out.alpha[k] = closure(coeffs_at(spec, grid[k]).B, path[k]);
    if (!out.alpha[k].allFinite()) {
      throw IntegrationError("non-finite closed-loop investment at node " + std::to_string(k),
                             static_cast<std::ptrdiff_t>(k), 0);
    }
  }
  return out;
}

BaselinePath baseline(const ModelSpec& spec, const TimeGrid& grid, BaselineKind kind) {
  return kind == BaselineKind::OpenLoop ? open_loop_nonrobust(spec, grid) : closed_loop_nonrobust(spec, grid);
}

}  // namespace rlq
