#pragma once

// Fixed-step classical Runge-Kutta integration on a uniform TimeGrid.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rlq/errors.hpp"
#include "rlq/model.hpp"

namespace rlq::ode {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
using Rhs = std::function<State<N>(double, const State<N>&)>;

/// Called after each node is produced, with the node index and its value.
template <std::size_t N>
using Observer = std::function<void(std::size_t, const State<N>&)>;

namespace detail {

template <std::size_t N>
State<N> axpy(const State<N>& y, double a, const State<N>& k) {
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + a * k[i];
  return out;
}

template <std::size_t N>
void require_finite(const State<N>& v, std::size_t node, int stage) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw IntegrationError("non-finite right-hand side at node " + std::to_string(node) + ", stage " +
                                 std::to_string(stage),
                             static_cast<std::ptrdiff_t>(node), stage);
    }
  }
}

}  // namespace detail

/// One RK4 step from (t, y) to t + h; stage t values are t, t + h/2, t_next.
/// `t_next` is passed separately so grid nodes are hit exactly.
template <std::size_t N>
State<N> rk4_step(const Rhs<N>& rhs, double t, double t_next, const State<N>& y, std::size_t node) {
  const double h = t_next - t;
  const double t_mid = t + 0.5 * h;
  const State<N> k1 = rhs(t, y);
  detail::require_finite(k1, node, 1);
  const State<N> k2 = rhs(t_mid, detail::axpy(y, 0.5 * h, k1));
  detail::require_finite(k2, node, 2);
  const State<N> k3 = rhs(t_mid, detail::axpy(y, 0.5 * h, k2));
  detail::require_finite(k3, node, 3);
  const State<N> k4 = rhs(t_next, detail::axpy(y, h, k3));
  detail::require_finite(k4, node, 4);
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

/// Terminal-value problem y(T) = terminal, integrated from T down to 0.
///
/// Returns y at every node ordered t_0..t_steps; the last entry is `terminal`
/// exactly. The observer sees nodes in integration order (steps, steps-1, ..., 0).
/// Non-finite stage values raise IntegrationError naming the node being produced.
template <std::size_t N>
std::vector<State<N>> integrate_backward(const Rhs<N>& rhs, const State<N>& terminal, const TimeGrid& grid,
                                         const Observer<N>& observer = {}) {
  const std::size_t n = grid.steps();
  std::vector<State<N>> path(n + 1);
  path[n] = terminal;
  if (observer) observer(n, terminal);
  for (std::size_t k = n; k-- > 0;) {
    path[k] = rk4_step<N>(rhs, grid[k + 1], grid[k], path[k + 1], k);
    if (observer) observer(k, path[k]);
  }
  return path;
}

/// Initial-value problem y(t_0) = initial over an arbitrary increasing list of nodes.
template <std::size_t N>
std::vector<State<N>> integrate_forward(const Rhs<N>& rhs, const State<N>& initial, const std::vector<double>& nodes) {
  std::vector<State<N>> path(nodes.size());
  if (nodes.empty()) return path;
  path[0] = initial;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) path[k + 1] = rk4_step<N>(rhs, nodes[k], nodes[k + 1], path[k], k + 1);
  return path;
}

}  // namespace rlq::ode
