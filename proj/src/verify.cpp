#include "rlq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rlq/errors.hpp"
#include "rlq/mv.hpp"
#include "rlq/odeint.hpp"
#include "rlq/simd/mc_kernels.hpp"

namespace rlq {

Residuals residuals(const ModelSpec& spec, const SolveResult& solved) {
  const Policy& p = solved.policy;
  const double xi = spec.xi;
  const double l = static_cast<double>(spec.d);
  Residuals r;
  r.min_sigma = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    const NodeCoeffs c = coeffs_at(spec, p.t[k]);
    const CoeffValues& y = solved.coeffs.values[k];
    const double M = y.M, delta = y.delta(), E = y.e();
    const Eigen::VectorXd& a = p.alpha[k];
    const Eigen::VectorXd& h = p.h[k];
    Eigen::VectorXd rz, rx;
    if (solved.mode == Mode::StateDep) {
      const Eigen::VectorXd vol = c.C + c.D.cwiseProduct(a);
      rz = E * vol - xi * h;
      rx = c.B * delta + M * c.D.cwiseProduct(vol) + delta * c.D.cwiseProduct(h) + c.R * a;
    } else {
      const double D = c.D[0];
      rz = E * D * a - xi * l * a.cwiseProduct(a).cwiseProduct(h);
      rx = c.B * delta + (D * D * M + c.R) * a + D * delta * h - xi * l * h.cwiseProduct(h).cwiseProduct(a);
    }
    const double z = rz.cwiseAbs().maxCoeff();
    const double x = rx.cwiseAbs().maxCoeff();
    if (!(z <= r.max_rho_zeta)) {
      r.max_rho_zeta = z;
      r.worst_zeta_node = k;
    }
    if (!(x <= r.max_rho_x)) {
      r.max_rho_x = x;
      r.worst_x_node = k;
    }
    r.min_sigma = std::min(r.min_sigma, p.sigma_min[k]);
  }
  return r;
}

std::uint64_t splitmix_at(std::uint64_t key, std::uint64_t i) noexcept {
  std::uint64_t z = key + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

McEstimate estimate(double sum, double sum_sq, double n, double target) {
  McEstimate e;
  e.estimate = sum / n;
  const double var = std::max(sum_sq - sum * sum / n, 0.0) / (n - 1.0);
  e.std_error = std::sqrt(var / n);
  e.target = target;
  const double diff = e.estimate - target;
  if (e.std_error > 0.0) {
    e.z = diff / e.std_error;
  } else {
    e.z = std::abs(diff) <= 1e-12 * std::max(1.0, std::abs(target)) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return e;
}

}  // namespace

McReport mc_cross_check(const Policy& policy, const ModelSpec& spec, const TimeGrid& grid, std::size_t n_paths,
                        std::uint64_t seed, std::size_t cells) {
  if (n_paths < 100) throw ValidationError("mc-paths: at least 100 paths are required");
  if (policy.alpha.size() != grid.size()) throw ValidationError("mc: policy does not match grid");
  const std::size_t steps = grid.steps();
  if (cells == 0) cells = std::min<std::size_t>(50, steps);
  cells = std::min(cells, steps);

  // The policy is deterministic, so a cell of several grid steps is still an
  // exact bivariate Gaussian transition of the log pair.
  std::vector<simd::CellStep> cell(cells);
  const double dt = grid.dt();
  std::size_t k0 = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t k1 = (c + 1) * steps / cells;
    double aa = 0.0, ah = 0.0, hh = 0.0, drift = 0.0;
    for (std::size_t k = k0; k < k1; ++k) {
      auto node = [&](std::size_t i, double& qa, double& qah, double& qh, double& qd) {
        const NodeCoeffs nc = coeffs_at(spec, grid[i]);
        const Eigen::VectorXd& a = policy.alpha[i];
        const Eigen::VectorXd& h = policy.h[i];
        qa = a.squaredNorm();
        qah = a.dot(h);
        qh = h.squaredNorm();
        qd = nc.A + nc.B.dot(a);
      };
      double a0, ah0, h0, d0, a1, ah1, h1, d1;
      node(k, a0, ah0, h0, d0);
      node(k + 1, a1, ah1, h1, d1);
      aa += 0.5 * dt * (a0 + a1);
      ah += 0.5 * dt * (ah0 + ah1);
      hh += 0.5 * dt * (h0 + h1);
      drift += 0.5 * dt * (d0 + d1);
    }
    simd::CellStep& s = cell[c];
    s.mx = drift - 0.5 * aa;
    s.mz = -0.5 * hh;
    s.l11 = std::sqrt(aa);
    s.l21 = s.l11 > 0.0 ? ah / s.l11 : 0.0;
    s.l22 = std::sqrt(std::max(hh - s.l21 * s.l21, 0.0));
    k0 = k1;
  }

  constexpr std::size_t kBlock = 4096;
  const double log_x0 = std::log(spec.x0);
  std::vector<double> lx(kBlock), lz(kBlock), z1(kBlock), z2(kBlock);
  simd::MomentSums total{};
  for (std::size_t start = 0; start < n_paths; start += kBlock) {
    const std::size_t m = std::min(kBlock, n_paths - start);
    std::fill_n(lx.begin(), m, log_x0);
    std::fill_n(lz.begin(), m, 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t key = splitmix_at(seed, start + i);
        const double u1 = unit_open(splitmix_at(key, 2 * c));
        const double u2 = unit_open(splitmix_at(key, 2 * c + 1));
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        z1[i] = r * std::cos(th);
        z2[i] = r * std::sin(th);
      }
      simd::advance(lx.data(), lz.data(), z1.data(), z2.data(), m, cell[c]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      lx[i] = std::exp(lx[i]);
      lz[i] = std::exp(lz[i]);
    }
    simd::MomentSums block{};
    simd::accumulate(lx.data(), lz.data(), m, block);
    for (std::size_t q = 0; q < block.size(); ++q) total[q] += block[q];
  }

  const TerminalStats stats = terminal_stats(policy, spec, grid);
  const auto n = static_cast<double>(n_paths);
  McReport rep;
  rep.n_paths = n_paths;
  rep.seed = seed;
  rep.cells = cells;
  rep.isa = simd::to_string(simd::active_isa());
  rep.zeta = estimate(total[0], total[1], n, 1.0);
  rep.zeta_x = estimate(total[2], total[3], n, stats.mean);
  rep.zeta_x2 = estimate(total[4], total[5], n, stats.variance + stats.mean * stats.mean);
  return rep;
}

const char* to_string(SpikeKind k) noexcept { return k == SpikeKind::U ? "u" : "h"; }

namespace {

/// Linear interpolation of a node-sampled vector path.
Eigen::VectorXd interp(const std::vector<Eigen::VectorXd>& path, const TimeGrid& grid, double t) {
  const double pos = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.steps()));
  const auto k = std::min(static_cast<std::size_t>(pos), grid.steps() - 1);
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * path[k] + w * path[k + 1];
}

/// State: E[X*], E[X*^2], E[Y], E[Y^2], E[X* Y], running cost; Y = X - X*.
using Moments = ode::State<6>;

double objective(const Eigen::VectorXd& v, const Eigen::VectorXd& eta, double eps, const ModelSpec& spec,
                 const SolveResult& solved) {
  const TimeGrid grid(solved.policy.t.back(), solved.policy.t.size() - 1);
  const Policy& p = solved.policy;
  const bool state_mode = solved.mode == Mode::StateDep;
  const double xi = spec.xi;
  const double l = static_cast<double>(spec.d);

  std::vector<double> nodes;
  const auto fine = static_cast<std::size_t>(std::max(4.0, std::ceil(eps / grid.dt())));
  for (std::size_t i = 0; i <= fine; ++i) nodes.push_back(eps * static_cast<double>(i) / static_cast<double>(fine));
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (grid[k] > eps * (1.0 + 1e-12)) nodes.push_back(grid[k]);

  bool on = false;
  const ode::Rhs<6> f = [&](double t, const Moments& y) {
    const NodeCoeffs c = coeffs_at(spec, t);
    const Eigen::VectorXd a = interp(p.alpha, grid, t);
    const Eigen::VectorXd h = on ? Eigen::VectorXd(interp(p.h, grid, t) + eta) : interp(p.h, grid, t);
    const double s = on ? 1.0 : 0.0;
    const Eigen::VectorXd vol = c.C + c.D.cwiseProduct(a);
    const Eigen::VectorXd dv = s * c.D.cwiseProduct(v);
    const double drift = c.A + c.B.dot(a) + vol.dot(h);
    const double lin = c.A + c.C.dot(h);
    const double kick = s * (c.B.dot(v)) + dv.dot(h);

    const double m1 = y[0], m2 = y[1], y1 = y[2], y2 = y[3], cx = y[4];
    Moments d;
    d[0] = drift * m1;
    d[1] = (2.0 * drift + vol.squaredNorm()) * m2;
    d[2] = lin * y1 + kick;
    d[3] = (2.0 * lin + c.C.squaredNorm()) * y2 + 2.0 * (kick + c.C.dot(dv)) * y1 + dv.squaredNorm();
    d[4] = (lin + drift + vol.dot(c.C)) * cx + (kick + vol.dot(dv)) * m1;

    const double ex2 = m2 + 2.0 * cx + y2;
    const double eu2 = a.squaredNorm() * m2 + 2.0 * s * a.dot(v) * m1 + s * v.squaredNorm();
    double penalty = 0.0;
    if (state_mode) {
      penalty = xi * h.squaredNorm() * ex2;
    } else {
      for (Eigen::Index j = 0; j < a.size(); ++j)
        penalty += xi * l * h[j] * h[j] * (a[j] * a[j] * m2 + 2.0 * s * a[j] * v[j] * m1 + s * v[j] * v[j]);
    }
    d[5] = 0.5 * (c.Q * ex2 + c.R * eu2 - penalty);
    return d;
  };

  Moments y{spec.x0, spec.x0 * spec.x0, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    on = nodes[k + 1] <= eps * (1.0 + 1e-12);
    y = ode::rk4_step<6>(f, nodes[k], nodes[k + 1], y, k + 1);
  }
  const double ex = y[0] + y[2];
  const double ex2 = y[1] + 2.0 * y[4] + y[3];
  return y[5] + 0.5 * spec.G * ex2 - 0.5 * spec.nu * ex * ex - spec.mu1 * spec.x0 * ex;
}

}  // namespace

double spike_quotient(SpikeKind kind, const Eigen::VectorXd& perturbation, double eps, const ModelSpec& spec,
                      const SolveResult& solved) {
  const double T = solved.policy.t.back();
  if (!(eps > 0.0 && eps < T)) throw ValidationError("spike: eps must lie in (0, T)");
  const auto d = static_cast<Eigen::Index>(spec.d);
  if (perturbation.size() != d) throw ValidationError("spike: perturbation needs d components");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  if (perturbation.isZero(0.0)) return 0.0;
  const Eigen::VectorXd& v = kind == SpikeKind::U ? perturbation : zero;
  const Eigen::VectorXd& eta = kind == SpikeKind::H ? perturbation : zero;
  const double j1 = objective(v, eta, eps, spec, solved);
  const double j0 = objective(zero, zero, eps, spec, solved);
  return (j1 - j0) / eps;
}

SpikeReport spike_ladder(SpikeKind kind, const Eigen::VectorXd& perturbation, const ModelSpec& spec,
                         const SolveResult& solved, std::vector<double> eps) {
  if (eps.size() < 2) throw ValidationError("spike: ladder needs at least two eps values");
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1])) throw ValidationError("spike: eps ladder must be strictly decreasing");

  SpikeReport r;
  r.kind = kind;
  r.perturbation = perturbation;
  r.eps = eps;
  for (double e : eps) r.quotients.push_back(spike_quotient(kind, perturbation, e, spec, solved));
  const std::size_t n = eps.size();
  const double e1 = eps[n - 2], e0 = eps[n - 1];
  const double q1 = r.quotients[n - 2], q0 = r.quotients[n - 1];
  r.extrapolated = q0 - (q1 - q0) * e0 / (e1 - e0);

  const Policy& p = solved.policy;
  const NodeCoeffs c = coeffs_at(spec, 0.0);
  const double l = static_cast<double>(spec.d);
  double pred = 0.0;
  for (Eigen::Index j = 0; j < perturbation.size(); ++j) {
    const double w = perturbation[j] * perturbation[j];
    if (kind == SpikeKind::U) {
      double sigma = c.R + c.D[j] * c.D[j] * p.p_tt.front();
      if (solved.mode == Mode::CtrlDep) sigma -= spec.xi * l * p.h.front()[j] * p.h.front()[j];
      pred += 0.5 * sigma * w;
    } else {
      const double phi = solved.mode == Mode::StateDep ? spec.xi : spec.xi * l * p.alpha.front()[j] * p.alpha.front()[j];
      pred -= 0.5 * phi * spec.x0 * spec.x0 * w;
    }
  }
  r.predicted = pred;
  return r;
}

namespace {
nlohmann::json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json to_json(const McEstimate& e) {
  return {{"estimate", num(e.estimate)}, {"std_error", num(e.std_error)}, {"target", num(e.target)}, {"z", num(e.z)}};
}
}  // namespace

nlohmann::json to_json(const Residuals& r) {
  return {{"max_rho_zeta", r.max_rho_zeta},
          {"max_rho_x", r.max_rho_x},
          {"min_sigma", num(r.min_sigma)},
          {"worst_zeta_node", r.worst_zeta_node},
          {"worst_x_node", r.worst_x_node}};
}

nlohmann::json to_json(const McReport& r) {
  return {{"n_paths", r.n_paths},
          {"seed", r.seed},
          {"cells", r.cells},
          {"isa", r.isa},
          {"zeta", to_json(r.zeta)},
          {"zeta_x", to_json(r.zeta_x)},
          {"zeta_x2", to_json(r.zeta_x2)}};
}

nlohmann::json to_json(const SpikeReport& r) {
  return {{"kind", to_string(r.kind)},  {"perturbation", vec(r.perturbation)}, {"eps", r.eps},
          {"quotients", r.quotients}, {"extrapolated", num(r.extrapolated)},   {"predicted", num(r.predicted)}};
}

}  // namespace rlq
