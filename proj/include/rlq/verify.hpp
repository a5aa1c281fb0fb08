#pragma once

// Independent checks of a solved equilibrium: first-order residuals, a
// change-of-measure Monte Carlo, and spike-variation quotients at t = 0.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rlq/equilibrium.hpp"
#include "rlq/model.hpp"

namespace rlq {

struct Residuals {
  double max_rho_zeta = 0.0;
  double max_rho_x = 0.0;
  double min_sigma = 0.0;
  std::size_t worst_zeta_node = 0;
  std::size_t worst_x_node = 0;
};

/// Per-unit-state first-order conditions, assembled from the adjoint
/// coefficients without the closed-form substitutions used by the solvers.
///   state: rho_zeta = E(C + D alpha) - xi h
///          rho_x    = B Delta + M D(C + D alpha) + Delta D h + R alpha
///   ctrl:  rho_zeta_j = E D alpha_j - xi l alpha_j^2 h_j
///          rho_x_j    = B_j Delta + D^2 M alpha_j + D h_j Delta + R alpha_j - xi l h_j^2 alpha_j
Residuals residuals(const ModelSpec& spec, const SolveResult& solved);

/// Counter-based SplitMix64 stream: value i of substream `key`.
std::uint64_t splitmix_at(std::uint64_t key, std::uint64_t i) noexcept;

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double z = 0.0;
};

struct McReport {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::size_t cells = 0;
  std::string isa;
  McEstimate zeta;     // E^P[zeta_T] vs 1
  McEstimate zeta_x;   // E^P[zeta_T X_T] vs the equilibrium mean
  McEstimate zeta_x2;  // E^P[zeta_T X_T^2] vs variance + mean^2
};

/// Simulates (log X, log zeta) under the reference measure with exact
/// Gaussian cell transitions. Path i uses substream (seed, i) only, so it does
/// not depend on n_paths. Rejects n_paths < 100. `cells` = 0 picks about 50.
McReport mc_cross_check(const Policy& policy, const ModelSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                        std::uint64_t seed, std::size_t cells = 0);

enum class SpikeKind { U, H };
const char* to_string(SpikeKind k) noexcept;

/// Objective at t = 0 after perturbing alpha* X* by v (u-spike) or h* by eta
/// (h-spike) on [0, eps), from exact moment ODEs on the solver grid with eps
/// inserted as a node. Returns (J_perturbed - J_equilibrium) / eps.
double spike_quotient(SpikeKind kind, const Eigen::VectorXd& perturbation, double eps, const ModelSpec& spec,
                      const SolveResult& solved);

struct SpikeReport {
  SpikeKind kind = SpikeKind::U;
  Eigen::VectorXd perturbation;
  std::vector<double> eps;
  std::vector<double> quotients;
  /// Linear extrapolation of the two smallest eps to eps = 0.
  double extrapolated = 0.0;
  /// u: 1/2 v' Sigma(0;0) v;  h: -1/2 eta' Phi(0) eta (second-order penalty).
  double predicted = 0.0;
};

/// Runs spike_quotient over a strictly decreasing ladder (default 1e-2, 1e-3, 1e-4).
SpikeReport spike_ladder(SpikeKind kind, const Eigen::VectorXd& perturbation, const ModelSpec& spec,
                         const SolveResult& solved, std::vector<double> eps = {1e-2, 1e-3, 1e-4});

nlohmann::json to_json(const Residuals& r);
nlohmann::json to_json(const McReport& r);
nlohmann::json to_json(const SpikeReport& r);

}  // namespace rlq
