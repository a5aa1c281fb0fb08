#include "rlq/ctrldep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rlq/errors.hpp"
#include "rlq/odeint.hpp"

namespace rlq::ctrldep {

namespace {

constexpr double kDiscTolerance = 1e-12;
constexpr double kSmallBeta = 1e-10;

std::string at_node(std::ptrdiff_t node) {
  return node >= 0 ? " at node " + std::to_string(node) : std::string();
}

void require_ctrl_mode(const ModelSpec& spec) {
  if (spec.mode != Mode::CtrlDep) throw ValidationError("mode: control-dependent solver needs mode ctrl_dep");
  const auto violations = validate(spec);
  if (!violations.empty()) throw ValidationError(violations.front().describe());
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

QuadCoeffs quad_coeffs(double M, double delta, double E, double D, double R, const Eigen::VectorXd& B, double xi,
                       double l) {
  QuadCoeffs q;
  q.kappa = D * D * M + R;
  q.beta = B * delta;
  q.gamma = D * D * (delta * E - E * E) / (xi * l);
  return q;
}

Eigen::VectorXd alpha(const QuadCoeffs& q, const Eigen::VectorXd* prev, bool terminal, std::ptrdiff_t node,
                      bool* near_zero_beta) {
  if (!(q.kappa > 0.0)) {
    throw SolverError("non-positive leading coefficient D^2 M + R" + at_node(node), node);
  }
  Eigen::VectorXd out(q.beta.size());
  for (Eigen::Index j = 0; j < q.beta.size(); ++j) {
    const double b = q.beta[j];
    double disc = b * b - 4.0 * q.kappa * q.gamma;
    if (disc < 0.0) {
      if (disc < -kDiscTolerance) throw SolverError("no real equilibrium root" + at_node(node), node);
      disc = 0.0;
    }
    if (std::abs(b) < kSmallBeta && near_zero_beta != nullptr) *near_zero_beta = true;
    if (b != 0.0) {
      out[j] = (-b - sign(b) * std::sqrt(disc)) / (2.0 * q.kappa);
      continue;
    }
    if (terminal) throw SolverError("zero terminal investment root (B_j Delta_T = 0)" + at_node(node), node);
    // beta = 0: roots are +-sqrt(-gamma/kappa); keep the side of the later node.
    const double side = prev != nullptr ? sign((*prev)[j]) : 0.0;
    if (side == 0.0 || q.gamma > 0.0) throw SolverError("no continuable equilibrium root" + at_node(node), node);
    out[j] = side * std::sqrt(-q.gamma / q.kappa);
  }
  return out;
}

Eigen::VectorXd h(const Eigen::VectorXd& alpha, double E, double D, double xi, double l, std::ptrdiff_t node) {
  Eigen::VectorXd out(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha[j] == 0.0) throw DegenerateCase("zero investment leaves no ambiguity penalty" + at_node(node), node);
    out[j] = E * D / (xi * l * alpha[j]);
  }
  return out;
}

CoeffValues rhs(const NodeCoeffs& c, const CoeffValues& y, const Eigen::VectorXd& alpha, double xi) {
  const double D2 = c.D[0] * c.D[0];
  const double E = y.e();
  const double ba = c.B.dot(alpha);
  const double a2 = alpha.squaredNorm();
  const double tilt = D2 * E / xi;
  CoeffValues dy;
  dy.L = -(2.0 * c.A + 2.0 * ba + 2.0 * tilt + D2 * a2) * y.L - 0.5 * c.Q - 0.5 * c.R * a2 + E * E * D2 / (2.0 * xi);
  dy.H = -(2.0 * c.A + 2.0 * ba + 2.0 * tilt) * y.H;
  dy.F = -(c.A + ba + tilt) * y.F;
  dy.M = -(2.0 * c.A + ba + tilt) * y.M - c.Q;
  dy.N = -(2.0 * c.A + ba + tilt) * y.N;
  dy.Gamma = -c.A * y.Gamma;
  return dy;
}

std::vector<double> gamma_closed_form(const ModelSpec& spec, const TimeGrid& grid) {
  std::vector<double> rate(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) rate[k] = spec.A.at(grid[k]);
  return linear_backward_closed_form(grid, rate, std::vector<double>(grid.size(), 0.0), spec.mu1);
}

SolveResult solve(const ModelSpec& spec, const TimeGrid& grid) {
  require_ctrl_mode(spec);
  if (spec.mu1 == 0.0) {
    throw DegenerateCase("mu1 = 0 under control-dependent ambiguity: the equilibrium is h* = 0, u* = 0 "
                         "and the worst-case drift formula divides by alpha*");
  }
  const double xi = spec.xi;
  const double l = static_cast<double>(spec.d);
  const std::size_t n = grid.size();

  SolveResult out;
  out.mode = Mode::CtrlDep;
  Policy& p = out.policy;
  p.t.resize(n);
  p.alpha.resize(n);
  p.h.resize(n);

  // Root continuity: every stage of the step t_{k+1} -> t_k uses alpha at t_{k+1}.
  Eigen::VectorXd later;
  std::vector<std::size_t> flagged;

  auto root_at = [&](double t, const CoeffValues& y, bool terminal, std::ptrdiff_t node, bool* small) {
    const NodeCoeffs c = coeffs_at(spec, t);
    const QuadCoeffs q = quad_coeffs(y.M, y.delta(), y.e(), c.D[0], c.R, c.B, xi, l);
    return alpha(q, later.size() ? &later : nullptr, terminal, node, small);
  };

  const ode::Rhs<6> f = [&](double t, const ode::State<6>& s) {
    const CoeffValues y = CoeffValues::unpack(s);
    return rhs(coeffs_at(spec, t), y, root_at(t, y, false, -1, nullptr), xi).pack();
  };
  const ode::Observer<6> watch = [&](std::size_t k, const ode::State<6>& s) {
    bool small = false;
    const auto node = static_cast<std::ptrdiff_t>(k);
    p.alpha[k] = root_at(grid[k], CoeffValues::unpack(s), k + 1 == n, node, &small);
    if (small && k + 1 < n) flagged.push_back(k);
    later = p.alpha[k];
  };
  const auto path = ode::integrate_backward<6>(f, terminal_values(spec).pack(), grid, watch);

  out.coeffs.t.resize(n);
  out.coeffs.values.resize(n);
  out.min_abs_alpha = std::numeric_limits<double>::infinity();
  const std::vector<NodeCoeffs> nodes = sample(spec, grid);
  for (std::size_t k = 0; k < n; ++k) {
    const CoeffValues y = CoeffValues::unpack(path[k]);
    out.coeffs.t[k] = grid[k];
    out.coeffs.values[k] = y;
    p.t[k] = grid[k];
    p.h[k] = h(p.alpha[k], y.e(), nodes[k].D[0], xi, l, static_cast<std::ptrdiff_t>(k));
    out.min_abs_alpha = std::min(out.min_abs_alpha, p.alpha[k].cwiseAbs().minCoeff());
  }

  p.p_tt = p_second_order(spec, grid, p.h, spec.G, 0.0);
  p.sigma_min.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const NodeCoeffs& c = nodes[k];
    const double base = c.R + c.D[0] * c.D[0] * p.p_tt[k];
    p.sigma_min[k] = (base - xi * l * p.h[k].array().square()).minCoeff();
  }

  if (!flagged.empty()) {
    std::ostringstream os;
    os << "|B_j Delta| < 1e-10 at " << flagged.size() << " interior node(s), first at t = " << grid[flagged.back()]
       << "; root branch kept by continuity";
    out.notes.push_back(os.str());
  }
  return out;
}

namespace {

double integral_of_A(const ModelSpec& spec, const TimeGrid& grid) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) s += 0.5 * grid.dt() * (spec.A.at(grid[k]) + spec.A.at(grid[k + 1]));
  return s;
}

double smallest_abs_b(const ModelSpec& spec) {
  double b = std::numeric_limits<double>::infinity();
  for (const auto& s : spec.B) b = std::min({b, std::abs(s.min_value()), std::abs(s.max_value())});
  // A sign change inside a table reaches zero.
  for (const auto& s : spec.B)
    if (s.min_value() < 0.0 && s.max_value() > 0.0) b = 0.0;
  return b;
}

}  // namespace

Constants default_constants(const ModelSpec& spec, const TimeGrid& grid) {
  const double l = static_cast<double>(spec.d);
  const double b = smallest_abs_b(spec);
  const double lxb = l * spec.xi * b * b;
  if (!(lxb > 1.0)) {
    std::ostringstream os;
    os << "constants: standing requirement l xi2 B^2 > 1 violated (" << lxb << ")";
    throw ValidationError(os.str());
  }
  double eps0 = std::min({0.5, 1.0 - 1.0 / lxb, spec.mu1 * b / 2.0, lxb - 1.0});
  Constants k;
  k.m_lo = spec.G * (1.0 - eps0);
  k.m_hi = spec.G * (1.0 + eps0);
  k.delta_hi = spec.mu1 * std::exp(integral_of_A(spec, grid));
  k.e_hi = spec.mu1 + eps0 * spec.G;
  k.phi = 0.0;
  return k;
}

void check_constants(const ModelSpec& spec, const TimeGrid& grid, const Constants& k) {
  const double gap = spec.G - spec.nu - spec.mu1;
  if (!(k.m_lo > 0.0 && k.m_lo <= spec.G)) throw ValidationError("constants: 0 < m_lo <= G violated");
  if (!(spec.G <= k.m_hi)) throw ValidationError("constants: G <= m_hi violated");
  if (!(-k.delta_hi <= gap && gap <= k.delta_hi))
    throw ValidationError("constants: -delta_hi <= G - nu - mu1 <= delta_hi violated");
  if (!(-k.e_hi <= gap && gap <= k.e_hi)) throw ValidationError("constants: -e_hi <= G - nu - mu1 <= e_hi violated");
  const double floor = spec.mu1 * std::exp(integral_of_A(spec, grid));
  if (k.delta_hi < floor) throw ValidationError("constants: delta_hi >= mu1 exp(int_0^T A) violated");
}

Certificate certify(const ModelSpec& spec, const TimeGrid& grid, const std::optional<Constants>& constants,
                    const SolveResult* solved) {
  require_ctrl_mode(spec);
  Constants k = constants.value_or(default_constants(spec, grid));
  check_constants(spec, grid, k);

  SolveResult own;
  if (solved == nullptr) {
    own = ctrldep::solve(spec, grid);
    solved = &own;
  }
  if (solved->policy.p_tt.size() != grid.size()) throw ValidationError("certify: solved path does not match grid");
  if (!(k.phi > 0.0)) k.phi = 0.5 * solved->min_abs_alpha;

  const double xi = spec.xi;
  const double l = static_cast<double>(spec.d);
  const double e = k.e_hi;
  const std::size_t n = grid.size();

  std::vector<double> uL1(n), uL0(n), vL1(n), vL0(n), uH1(n), vH1(n), uF1(n), vF1(n), uM1(n), vM1(n), src(n);
  std::vector<double> alpha_bar(n), b_bar(n), disc(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeCoeffs c = coeffs_at(spec, grid[i]);
    const double D = c.D[0];
    const double D2 = D * D;
    const double w = D2 * k.m_lo + c.R;
    double bb = 0.0;
    double aa = 0.0;
    double worst_disc = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < c.B.size(); ++j) {
      const double a = std::abs(c.B[j]) * k.delta_hi / w +
                       std::abs(D) * std::sqrt(e * e + k.delta_hi * e) / std::sqrt(xi * l * w);
      bb += std::abs(c.B[j]) * a;
      aa += a * a;
      worst_disc = std::min(worst_disc, xi * l * c.B[j] * c.B[j] - D2 * (D2 * k.m_hi + c.R));
    }
    alpha_bar[i] = std::sqrt(aa);
    b_bar[i] = bb;
    disc[i] = worst_disc;
    const double tilt = D2 * e / xi;
    uL1[i] = 2.0 * c.A - 2.0 * bb - 2.0 * tilt;
    uL0[i] = c.Q / 2.0 - e * e * D2 / (2.0 * xi);
    vL1[i] = 2.0 * c.A + 2.0 * bb + 2.0 * tilt + D2 * aa;
    vL0[i] = c.Q / 2.0 + c.R * aa / 2.0;
    uH1[i] = 2.0 * c.A - 2.0 * bb - 2.0 * tilt;
    vH1[i] = 2.0 * c.A + 2.0 * bb + 2.0 * tilt;
    uF1[i] = c.A - bb - tilt;
    vF1[i] = c.A + bb + tilt;
    uM1[i] = 2.0 * c.A - bb - tilt;
    vM1[i] = 2.0 * c.A + bb + tilt;
    src[i] = c.Q;
  }
  const std::vector<double> zero(n, 0.0);
  auto env = [&](const std::vector<double>& rate, const std::vector<double>& s, double terminal) {
    return linear_backward_closed_form(grid, rate, s, terminal);
  };

  Certificate cert;
  cert.mode = Mode::CtrlDep;
  cert.constants = {{"m_lo", k.m_lo}, {"m_hi", k.m_hi}, {"delta_hi", k.delta_hi}, {"e_hi", k.e_hi}, {"phi", k.phi}};
  cert.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) cert.t[i] = grid[i];

  auto& v = cert.envelopes;
  v["L_lo"] = env(uL1, uL0, spec.G / 2.0);
  v["L_hi"] = env(vL1, vL0, spec.G / 2.0);
  v["H_lo"] = env(uH1, zero, spec.nu);
  v["H_hi"] = env(vH1, zero, spec.nu);
  v["F_lo"] = env(uF1, zero, spec.mu1);
  v["F_hi"] = env(vF1, zero, spec.mu1);
  v["M_lo"] = env(uM1, src, spec.G);
  v["M_hi"] = env(vM1, src, spec.G);
  {
    // I = M - N can start negative, so take both orderings.
    auto a = env(uM1, src, spec.G - spec.nu);
    auto b = env(vM1, src, spec.G - spec.nu);
    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(a[i], b[i]);
      hi[i] = std::max(a[i], b[i]);
    }
    v["I_lo"] = std::move(lo);
    v["I_hi"] = std::move(hi);
  }
  v["Gamma"] = gamma_closed_form(spec, grid);
  v["alpha_bar"] = alpha_bar;
  v["b_bar"] = b_bar;
  v["discriminant"] = disc;
  v["P_tt"] = solved->policy.p_tt;
  v["Sigma_min"] = solved->policy.sigma_min;

  MarginTracker l_pos("L_lo>=0"), m_lo("M_lo>=m_lo"), m_hi("M_hi<=m_hi"), i_hi("I_hi-Gamma<=delta_hi"),
      i_lo("I_lo-Gamma>=-delta_hi"), e_up("E_hi<=e_hi"), e_dn("E_lo>=-e_hi"), dsc("discriminant>=0"),
      sig("Sigma>=0"), phi("min|alpha|>=phi");
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid[i];
    l_pos.observe(v["L_lo"][i], i, t);
    m_lo.observe(v["M_lo"][i] - k.m_lo, i, t);
    m_hi.observe(k.m_hi - v["M_hi"][i], i, t);
    i_hi.observe(k.delta_hi - (v["I_hi"][i] - v["Gamma"][i]), i, t);
    i_lo.observe(v["I_lo"][i] - v["Gamma"][i] + k.delta_hi, i, t);
    e_up.observe(e - (2.0 * v["L_hi"][i] - v["H_lo"][i] - v["F_lo"][i]), i, t);
    e_dn.observe(2.0 * v["L_lo"][i] - v["H_hi"][i] - v["F_hi"][i] + e, i, t);
    dsc.observe(disc[i], i, t);
    sig.observe(solved->policy.sigma_min[i], i, t);
    phi.observe(solved->policy.alpha[i].cwiseAbs().minCoeff() - k.phi, i, t);
  }
  for (const auto* m : {&l_pos, &m_lo, &m_hi, &i_hi, &i_lo, &e_up, &e_dn, &dsc, &sig, &phi})
    cert.margins.push_back(m->result());
  cert.verdict = true;
  for (const auto& m : cert.margins) cert.verdict = cert.verdict && m.ok();
  return cert;
}

}  // namespace rlq::ctrldep
