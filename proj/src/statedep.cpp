#include "rlq/statedep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rlq/errors.hpp"
#include "rlq/odeint.hpp"

namespace rlq::statedep {

namespace {

constexpr double kMinRcond = 1e-12;

std::string where(std::ptrdiff_t node, double t) {
  std::ostringstream os;
  if (node >= 0) os << " at node " << node;
  os << " (t = " << t << ")";
  return os.str();
}

void require_state_mode(const ModelSpec& spec) {
  if (spec.mode != Mode::StateDep) throw ValidationError("mode: state-dependent solver needs mode state_dep");
  const auto violations = validate(spec);
  if (!violations.empty()) throw ValidationError(violations.front().describe());
}

}  // namespace

Eigen::VectorXd alpha(const NodeCoeffs& c, double M, double delta, double E, double xi, std::ptrdiff_t node) {
  const double s = M + delta * E / xi;
  const Eigen::VectorXd dd = c.D.array().square();
  const Eigen::Index d = c.B.size();
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(d, d) * c.R;
  W.diagonal() += s * dd;
  const Eigen::VectorXd rhs = s * c.D.cwiseProduct(c.C) + c.B * delta;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(W);
  if (ldlt.info() != Eigen::Success || !(ldlt.rcond() >= kMinRcond)) {
    throw SolverError("singular investment matrix R + (M + Delta E/xi) D'D" + where(node, c.t), node);
  }
  return -ldlt.solve(rhs);
}

Eigen::VectorXd h(const Eigen::VectorXd& alpha, double E, const NodeCoeffs& c, double xi) {
  return (E / xi) * (c.C + c.D.cwiseProduct(alpha));
}

CoeffValues rhs(const NodeCoeffs& c, const CoeffValues& y, double xi) {
  const double E = y.e();
  const Eigen::VectorXd a = alpha(c, y.M, y.delta(), E, xi);
  const Eigen::VectorXd v = c.C + c.D.cwiseProduct(a);  // C + D alpha
  const double v2 = v.squaredNorm();
  const double ba = c.B.dot(a);
  const double ra = c.R * a.squaredNorm();
  const double e_xi = E / xi;
  // (2C + D alpha)'(C + D alpha) and C'(C + D alpha)
  const double cross = (2.0 * c.C + c.D.cwiseProduct(a)).dot(v);
  const double cv = c.C.dot(v);

  CoeffValues dy;
  dy.L = -(2.0 * (c.A + ba) + (2.0 * e_xi + 1.0) * v2) * y.L - 0.5 * c.Q - 0.5 * ra + E * E * v2 / (2.0 * xi);
  dy.H = -(2.0 * (c.A + ba) + 2.0 * v2 * e_xi) * y.H;
  dy.F = -((c.A + ba) + v2 * e_xi) * y.F;
  dy.M = -(2.0 * c.A + ba + cross * e_xi + cv) * y.M - c.Q + E * E * v2 / xi;
  dy.N = -(2.0 * c.A + ba + cross * e_xi) * y.N;
  dy.Gamma = -(c.A + cv * e_xi) * y.Gamma;
  return dy;
}

SolveResult solve(const ModelSpec& spec, const TimeGrid& grid) {
  require_state_mode(spec);
  const double xi = spec.xi;

  const ode::Rhs<6> f = [&](double t, const ode::State<6>& y) {
    return rhs(coeffs_at(spec, t), CoeffValues::unpack(y), xi).pack();
  };
  const auto path = ode::integrate_backward<6>(f, terminal_values(spec).pack(), grid);

  SolveResult out;
  out.mode = Mode::StateDep;
  const std::size_t n = grid.size();
  out.coeffs.t.resize(n);
  out.coeffs.values.resize(n);
  Policy& p = out.policy;
  p.t.resize(n);
  p.alpha.resize(n);
  p.h.resize(n);
  out.min_abs_alpha = std::numeric_limits<double>::infinity();

  std::vector<NodeCoeffs> nodes = sample(spec, grid);
  Eigen::VectorXd w_next;
  for (std::size_t k = n; k-- > 0;) {
    // W is diagonal; a sign flip of any entry between neighbouring nodes means
    // alpha* went through a pole the grid stepped over.
    const CoeffValues y = CoeffValues::unpack(path[k]);
    const double s = y.M + y.delta() * y.e() / xi;
    const Eigen::VectorXd w = (nodes[k].R + s * nodes[k].D.array().square()).matrix();
    if (w_next.size() && ((w.array() * w_next.array()) <= 0.0).any()) {
      throw SolverError("investment matrix R + (M + Delta E/xi) D'D changes sign" +
                            where(static_cast<std::ptrdiff_t>(k), grid[k]) + "; alpha* blows up",
                        static_cast<std::ptrdiff_t>(k));
    }
    w_next = w;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const CoeffValues y = CoeffValues::unpack(path[k]);
    out.coeffs.t[k] = grid[k];
    out.coeffs.values[k] = y;
    p.t[k] = grid[k];
    p.alpha[k] = alpha(nodes[k], y.M, y.delta(), y.e(), xi, static_cast<std::ptrdiff_t>(k));
    p.h[k] = h(p.alpha[k], y.e(), nodes[k], xi);
    out.min_abs_alpha = std::min(out.min_abs_alpha, p.alpha[k].cwiseAbs().minCoeff());
  }

  // Without C the variance term is of higher order and P carries G; otherwise G - nu.
  const double g_tilde = spec.c_is_zero() ? spec.G : spec.G - spec.nu;
  p.p_tt = p_second_order(spec, grid, p.h, g_tilde, xi);
  p.sigma_min.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const NodeCoeffs& c = nodes[k];
    p.sigma_min[k] = (c.R + p.p_tt[k] * c.D.array().square()).minCoeff();
  }
  return out;
}

Constants default_constants(const ModelSpec& spec) {
  const double eps0 = std::min(0.5, spec.mu1);
  const double terminal_gap = spec.G - spec.nu - spec.mu1;
  Constants k;
  k.m_lo = spec.G * (1.0 - eps0);
  k.m_hi = spec.G * (1.0 + eps0);
  k.delta_lo = terminal_gap - eps0 * spec.G;
  k.e_lo = k.delta_lo;
  return k;
}

void check_constants(const ModelSpec& spec, const Constants& k) {
  const double gap = spec.G - spec.nu - spec.mu1;
  if (!(k.m_lo > 0.0 && k.m_lo <= spec.G)) throw ValidationError("constants: 0 < m_lo <= G violated");
  if (!(spec.G <= k.m_hi)) throw ValidationError("constants: G <= m_hi violated");
  if (!(k.delta_lo <= gap && gap <= 0.0)) throw ValidationError("constants: delta_lo <= G - nu - mu1 <= 0 violated");
  if (!(k.e_lo <= gap && gap <= 0.0)) throw ValidationError("constants: e_lo <= G - nu - mu1 <= 0 violated");
}

namespace {

/// Node-wise bounds on the truncated investment terms and the comparison rates.
struct Rates {
  std::vector<double> uL1, uL0, vL1, vL0;
  std::vector<double> uH1, vH1, uF1, vF1;
  std::vector<double> uM1, uM0, vM1, vM0;
  std::vector<double> uN1, vN1, uG1, vG1;
  std::vector<double> tau;
  std::vector<double> b_lo, b_hi, c_lo, c_hi, d_hi, r_hi;

  explicit Rates(std::size_t n) {
    for (auto* v : {&uL1, &uL0, &vL1, &vL0, &uH1, &vH1, &uF1, &vF1, &uM1, &uM0, &vM1, &vM0, &uN1, &vN1, &uG1, &vG1,
                    &tau, &b_lo, &b_hi, &c_lo, &c_hi, &d_hi, &r_hi})
      v->resize(n);
  }
};

Rates comparison_rates(const ModelSpec& spec, const TimeGrid& grid, const Constants& k) {
  const double xi = spec.xi;
  const double e = k.e_lo;
  const double dl = k.delta_lo;
  const double s = k.m_hi + dl * e / xi;
  Rates r(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const NodeCoeffs c = coeffs_at(spec, grid[i]);
    const Eigen::Index d = c.B.size();
    const Eigen::VectorXd dd = c.D.array().square();
    Eigen::MatrixXd w_lo = Eigen::MatrixXd::Identity(d, d) * c.R;
    w_lo.diagonal() += k.m_lo * dd;
    Eigen::MatrixXd w_hi = Eigen::MatrixXd::Identity(d, d) * c.R;
    w_hi.diagonal() += s * dd;
    const Eigen::MatrixXd dtd = dd.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w_lo, Eigen::EigenvaluesOnly);
    r.tau[i] = eig.eigenvalues().minCoeff();

    const Eigen::VectorXd dc = c.D.cwiseProduct(c.C);
    const Eigen::LDLT<Eigen::MatrixXd> lo(w_lo);
    const Eigen::LDLT<Eigen::MatrixXd> hi(w_hi);
    const Eigen::VectorXd u = lo.solve(c.B);   // W_lo^{-1} B
    const Eigen::VectorXd w = lo.solve(dc);    // W_lo^{-1} D'C
    const double bb = c.B.dot(u);
    const double cc = dc.dot(w);
    const double cc_hi = dc.dot(hi.solve(dc));

    r.b_lo[i] = -s * (bb + cc) / 2.0;
    r.b_hi[i] = s * (bb + cc) / 2.0 - dl * bb;
    r.c_lo[i] = -s * cc + dl * (bb + cc) / 2.0;
    r.c_hi[i] = -k.m_lo * cc_hi - dl * (bb + cc) / 2.0;
    r.d_hi[i] = 2.0 * dl * dl * u.dot(dtd * u) + 2.0 * s * s * w.dot(dtd * w);
    r.r_hi[i] = 2.0 * dl * dl * c.R * u.squaredNorm() + 2.0 * s * s * c.R * w.squaredNorm();

    const double c2 = c.C.squaredNorm();
    const double quad = c2 + 2.0 * r.c_hi[i] + r.d_hi[i];
    const double m_up = std::max(2.0 * c2 + 3.0 * r.c_hi[i] + r.d_hi[i], 0.0);
    const double m_dn = std::min(2.0 * c2 + 3.0 * r.c_lo[i], 0.0);

    r.uL1[i] = 2.0 * c.A + 2.0 * r.b_lo[i] + 2.0 * e * quad / xi;
    r.uL0[i] = c.Q / 2.0 - e * e * quad / (2.0 * xi);
    r.vL1[i] = 2.0 * c.A + 2.0 * r.b_hi[i] + quad;
    r.vL0[i] = c.Q / 2.0 + r.r_hi[i] / 2.0;
    r.uH1[i] = r.uL1[i];
    r.vH1[i] = 2.0 * c.A + 2.0 * r.b_hi[i];
    r.uF1[i] = c.A + r.b_lo[i] + e * quad / xi;
    r.vF1[i] = c.A + r.b_hi[i];
    r.uM1[i] = 2.0 * c.A + r.b_lo[i] + e * m_up / xi + c2 + r.c_lo[i];
    r.uM0[i] = c.Q - e * e * quad / xi;
    r.vM1[i] = 2.0 * c.A + r.b_hi[i] + e * m_dn / xi + c2 + r.c_hi[i];
    r.vM0[i] = c.Q;
    r.uN1[i] = 2.0 * c.A + r.b_lo[i] + e * m_up / xi;
    r.vN1[i] = 2.0 * c.A + r.b_hi[i] + e * m_dn / xi;
    r.uG1[i] = c.A + e * std::max(c2 + r.c_hi[i], 0.0) / xi;
    r.vG1[i] = c.A + e * std::min(c2 + r.c_lo[i], 0.0) / xi;
  }
  return r;
}

}  // namespace

Certificate certify(const ModelSpec& spec, const TimeGrid& grid, const std::optional<Constants>& constants,
                    const SolveResult* solved) {
  require_state_mode(spec);
  const Constants k = constants.value_or(default_constants(spec));
  check_constants(spec, k);

  const Rates r = comparison_rates(spec, grid, k);
  const std::vector<double> zero(grid.size(), 0.0);
  auto env = [&](const std::vector<double>& rate, const std::vector<double>& src, double terminal) {
    return linear_backward_closed_form(grid, rate, src, terminal);
  };

  Certificate cert;
  cert.mode = Mode::StateDep;
  cert.constants = {{"m_lo", k.m_lo}, {"m_hi", k.m_hi}, {"delta_lo", k.delta_lo}, {"e_lo", k.e_lo}};
  cert.t.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) cert.t[i] = grid[i];

  auto& e = cert.envelopes;
  e["L_lo"] = env(r.uL1, r.uL0, spec.G / 2.0);
  e["L_hi"] = env(r.vL1, r.vL0, spec.G / 2.0);
  e["H_lo"] = env(r.uH1, zero, spec.nu);
  e["H_hi"] = env(r.vH1, zero, spec.nu);
  e["F_lo"] = env(r.uF1, zero, spec.mu1);
  e["F_hi"] = env(r.vF1, zero, spec.mu1);
  e["M_lo"] = env(r.uM1, r.uM0, spec.G);
  e["M_hi"] = env(r.vM1, r.vM0, spec.G);
  e["N_lo"] = env(r.uN1, zero, spec.nu);
  e["N_hi"] = env(r.vN1, zero, spec.nu);
  e["Gamma_lo"] = env(r.uG1, zero, spec.mu1);
  e["Gamma_hi"] = env(r.vG1, zero, spec.mu1);
  e["b_lo"] = r.b_lo;
  e["b_hi"] = r.b_hi;
  e["c_lo"] = r.c_lo;
  e["c_hi"] = r.c_hi;
  e["d_hi"] = r.d_hi;
  e["r_hi"] = r.r_hi;
  e["tau"] = r.tau;

  SolveResult own;
  if (solved == nullptr) {
    own = statedep::solve(spec, grid);
    solved = &own;
  }
  if (solved->policy.p_tt.size() != grid.size()) throw ValidationError("certify: solved path does not match grid");
  e["P_tt"] = solved->policy.p_tt;

  MarginTracker l_pos("L_lo>=0"), m_lo("M_lo>=m_lo"), m_hi("M_hi<=m_hi"), d_hi("Delta_hi<=0"),
      d_lo("Delta_lo>=delta_lo"), e_hi("E_hi<=0"), e_lo("E_lo>=e_lo"), tau("tau>0"), sig("R+D'PD>=0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    l_pos.observe(e["L_lo"][i], i, t);
    m_lo.observe(e["M_lo"][i] - k.m_lo, i, t);
    m_hi.observe(k.m_hi - e["M_hi"][i], i, t);
    d_hi.observe(-(e["M_hi"][i] - e["N_lo"][i] - e["Gamma_lo"][i]), i, t);
    d_lo.observe(e["M_lo"][i] - e["N_hi"][i] - e["Gamma_hi"][i] - k.delta_lo, i, t);
    e_hi.observe(-(2.0 * e["L_hi"][i] - e["H_lo"][i] - e["F_lo"][i]), i, t);
    e_lo.observe(2.0 * e["L_lo"][i] - e["H_hi"][i] - e["F_hi"][i] - k.e_lo, i, t);
    tau.observe(r.tau[i], i, t);
    const NodeCoeffs c = coeffs_at(spec, t);
    sig.observe((c.R + solved->policy.p_tt[i] * c.D.array().square()).minCoeff(), i, t);
  }
  for (const auto* m : {&l_pos, &m_lo, &m_hi, &d_hi, &d_lo, &e_hi, &e_lo, &tau, &sig})
    cert.margins.push_back(m->result());

  cert.verdict = tau.result().slack > 0.0;
  for (const auto& m : cert.margins) cert.verdict = cert.verdict && m.ok();
  return cert;
}

}  // namespace rlq::statedep
