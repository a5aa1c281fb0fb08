// Acceptance run: one PASS/FAIL line per criterion, detail lines indented
// below it. Exits with the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rlq/baseline.hpp"
#include "rlq/ctrldep.hpp"
#include "rlq/errors.hpp"
#include "rlq/mv.hpp"
#include "rlq/statedep.hpp"
#include "rlq/verify.hpp"

using namespace rlq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back((ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { details.push_back("note  " + what); }
};

ModelSpec bench(Mode m, double mu1, double xi) {
  ModelSpec s = ModelSpec::benchmark(m);
  s.mu1 = mu1;
  s.xi = xi;
  return s;
}

const char* mode_name(Mode m) { return m == Mode::StateDep ? "state" : "ctrl"; }

// Every configuration solved on the benchmark coefficients, for the residual criterion.
struct Solved {
  std::string label;
  ModelSpec spec;
  SolveResult result;
};
std::vector<Solved> g_solved;

void remember(const std::string& label, const ModelSpec& s, const SolveResult& r) { g_solved.push_back({label, s, r}); }

double max_abs(const std::vector<Eigen::VectorXd>& v, double shift = 0.0) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, (x.array() + shift).abs().maxCoeff());
  return m;
}

Criterion terminal_identity() {
  Criterion c{1, "terminal value alpha*_T = mu1 B / (1 + mu1^2/xi), both modes, 1e-10; < 1 s per solve"};
  double slowest = 0.0;
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    for (double mu1 : {0.5, 2.0, 5.0}) {
      for (double xi : {1.0, 10.0, 100.0}) {
        const auto s = bench(m, mu1, xi);
        const double target = mu1 * 0.375 / (1.0 + mu1 * mu1 / xi);
        const auto label = fmt("%s mu1=%g xi=%g", mode_name(m), mu1, xi);
        const auto t0 = Clock::now();
        try {
          const auto r = solve(s, s.grid());
          slowest = std::max(slowest, seconds_since(t0));
          remember(label, s, r);
          const double got = r.policy.alpha.back()[0];
          c.require(std::abs(got - target) < 1e-10, fmt("%s: alpha_T=%.12g target=%.12g", label.c_str(), got, target));
        } catch (const SolverError& e) {
          slowest = std::max(slowest, seconds_since(t0));
          c.require(false, label + ": no solution (" + e.what() + ")");
        }
      }
    }
  }
  c.require(slowest < 1.0, fmt("slowest solve %.3f s", slowest));
  return c;
}

Criterion risk_limits() {
  Criterion c{2, "state mode xi=10: mu1=0 gives alpha*=h*=0 (1e-10); mu1=1e6 gives alpha*->0, h*->-B (1e-3)"};
  const auto zero = bench(Mode::StateDep, 0.0, 10.0);
  const auto r0 = solve(zero, zero.grid());
  remember("state mu1=0 xi=10", zero, r0);
  c.require(max_abs(r0.policy.alpha) < 1e-10, fmt("mu1=0: max|alpha*|=%.3g", max_abs(r0.policy.alpha)));
  c.require(max_abs(r0.policy.h) < 1e-10, fmt("mu1=0: max|h*|=%.3g", max_abs(r0.policy.h)));
  const auto big = bench(Mode::StateDep, 1e6, 10.0);
  const auto r1 = solve(big, big.grid());
  remember("state mu1=1e6 xi=10", big, r1);
  c.require(max_abs(r1.policy.alpha) < 1e-3, fmt("mu1=1e6: max|alpha*|=%.3g", max_abs(r1.policy.alpha)));
  c.require(max_abs(r1.policy.h, 0.375) < 1e-3, fmt("mu1=1e6: max|h*+B|=%.3g", max_abs(r1.policy.h, 0.375)));
  return c;
}

Criterion ctrl_terminal() {
  Criterion c{3, "ctrl example mu1=2 xi=10: alpha*_T=0.75, h*_T=-1/(xi l B) to 1e-9; l xi B^2 > 1 enforced"};
  const auto s = bench(Mode::CtrlDep, 2.0, 10.0);
  const auto r = solve(s, s.grid());
  remember("ctrl mu1=2 xi=10", s, r);
  const double a = r.policy.alpha.back()[0];
  const double h = r.policy.h.back()[0];
  c.require(std::abs(a - 0.75) < 1e-9, fmt("alpha*_T=%.12g", a));
  c.require(std::abs(h + 1.0 / 3.75) < 1e-9, fmt("h*_T=%.12g (-1/3.75 = %.12g)", h, -1.0 / 3.75));
  const double lxb = 1.0 * 10.0 * 0.375 * 0.375;
  c.require(lxb == 1.40625, fmt("l xi B^2 = %.5f", lxb));
  bool accepted = true;
  try {
    ctrldep::default_constants(s, s.grid());
  } catch (const ValidationError&) {
    accepted = false;
  }
  bool rejected = false;
  try {
    const auto weak = bench(Mode::CtrlDep, 2.0, 1.0);
    ctrldep::default_constants(weak, weak.grid());
  } catch (const ValidationError& e) {
    rejected = true;
    c.note(std::string("xi=1: ") + e.what());
  }
  c.require(accepted && rejected, "certificate constants accept 1.40625 and reject l xi B^2 = 0.140625");
  return c;
}

Criterion open_loop_limit() {
  Criterion c{4, "xi=1e8: alpha* matches the non-robust open-loop rule, max-node error < 1e-4"};
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    const auto s = bench(m, 2.0, 1e8);
    const auto r = solve(s, s.grid());
    remember(fmt("%s mu1=2 xi=1e8", mode_name(m)), s, r);
    const auto b = open_loop_nonrobust(s, s.grid());
    double err = 0.0;
    for (std::size_t k = 0; k < b.t.size(); ++k) err = std::max(err, std::abs(r.policy.alpha[k][0] - b.alpha[k][0]));
    c.require(err < 1e-4, fmt("%s: max error %.3g", mode_name(m), err));
  }
  return c;
}

Criterion frontier_closure() {
  Criterion c{5, "risk sweep endpoints mu1=0 and 1e6 both within 1e-3 of (e^0.02, 0)"};
  const auto s = ModelSpec::benchmark();
  const auto rows = sweep_risk(s, s.grid(), {0.0, 1e6});
  for (const auto& r : rows) {
    const bool ok = r.status == RowStatus::Ok && std::abs(r.mean - std::exp(0.02)) < 1e-3 && r.std_dev < 1e-3;
    c.require(ok, fmt("mu1=%g: mean=%.9f std=%.3g", r.mu1, r.mean, r.std_dev));
  }
  return c;
}

Criterion relations() {
  Criterion c{6, "xi=5+2mu1: mean changes < 1% from mu1=1e5 to 1e6; xi=2mu1^2: mean strictly increasing on 10,100,1000"};
  const auto s = ModelSpec::benchmark();
  const auto lin = relation_sweep(s, s.grid(), {Relation::Form::Linear, 5.0, 2.0}, {1e5, 1e6});
  const bool lin_ok = lin[0].status == RowStatus::Ok && lin[1].status == RowStatus::Ok;
  const double change = std::abs(lin[1].mean / lin[0].mean - 1.0);
  c.require(lin_ok && change < 0.01,
            fmt("linear: mean %.9f -> %.9f, relative change %.3g", lin[0].mean, lin[1].mean, change));

  const auto quad = relation_sweep(s, s.grid(), {Relation::Form::Quadratic, 0.0, 2.0}, {10.0, 100.0, 1000.0});
  bool increasing = true;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    const auto& r = quad[i];
    if (r.status != RowStatus::Ok) {
      increasing = false;
      c.note(fmt("quadratic mu1=%g xi=%g: %s: %s", r.mu1, r.xi, to_string(r.status), r.message.c_str()));
    } else {
      c.note(fmt("quadratic mu1=%g xi=%g: mean %.9f", r.mu1, r.xi, r.mean));
      if (i > 0 && !(r.mean > quad[i - 1].mean)) increasing = false;
    }
  }
  c.require(increasing, "quadratic means strictly increasing");
  return c;
}

Criterion residual_check() {
  Criterion c{7, "max-node |rho_zeta|, |rho_x| < 1e-8 and min-node Sigma(t;t) >= -1e-10 on every solved configuration"};
  for (const auto& s : g_solved) {
    const auto r = residuals(s.spec, s.result);
    const bool ok = r.max_rho_zeta < 1e-8 && r.max_rho_x < 1e-8 && r.min_sigma >= -1e-10;
    c.require(ok, fmt("%s: rho_zeta=%.2g rho_x=%.2g min Sigma=%.6g", s.label.c_str(), r.max_rho_zeta, r.max_rho_x,
                      r.min_sigma));
  }
  return c;
}

Criterion spikes() {
  Criterion c{8, "spikes at t=0: u-quotient within 1% of Sigma(0;0)v^2/2 at eps=1e-4; h-quotient <= 1e-6; < 5 s"};
  const auto t0 = Clock::now();
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    const auto s = ModelSpec::benchmark(m);
    const auto r = solve(s, s.grid());
    const auto u = spike_ladder(SpikeKind::U, Eigen::VectorXd::Ones(1), s, r);
    const double q = u.quotients.back();
    c.require(std::abs(q - u.predicted) <= 0.01 * std::abs(u.predicted),
              fmt("%s u v=1: ladder %.6f %.6f %.6f, predicted %.6f", mode_name(m), u.quotients[0], u.quotients[1],
                  q, u.predicted));
    double worst = -1e300;
    for (double eta : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0})
      worst = std::max(worst, spike_quotient(SpikeKind::H, Eigen::VectorXd::Constant(1, eta), 1e-4, s, r));
    c.require(worst <= 1e-6, fmt("%s h eta in {+-0.25,+-0.5,+-1}: largest quotient %.4g", mode_name(m), worst));
  }
  const double secs = seconds_since(t0);
  c.require(secs < 5.0, fmt("runtime %.3f s", secs));
  return c;
}

Criterion monte_carlo() {
  Criterion c{9, "1e5 exact-lognormal paths: |z| < 4 for E[zeta_T], E[zeta_T X_T], E[zeta_T X_T^2]; < 10 s"};
  const auto t0 = Clock::now();
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    const auto s = ModelSpec::benchmark(m);
    const auto r = solve(s, s.grid());
    const auto mc = mc_cross_check(r.policy, s, s.grid(), 100000, 7);
    const bool ok = std::abs(mc.zeta.z) < 4.0 && std::abs(mc.zeta_x.z) < 4.0 && std::abs(mc.zeta_x2.z) < 4.0;
    c.require(ok, fmt("%s (%s, %zu cells): z = %.3f, %.3f, %.3f", mode_name(m), mc.isa.c_str(), mc.cells, mc.zeta.z,
                      mc.zeta_x.z, mc.zeta_x2.z));
  }
  const double secs = seconds_since(t0);
  c.require(secs < 10.0, fmt("runtime %.3f s", secs));
  return c;
}

// Regression horizons from bisection on [1e-4, 1] with 40 halvings at 2000 steps.
constexpr double kStateHorizon = 0.039333741717048717;
constexpr double kCtrlHorizon = 0.041291515333631922;

Criterion certificates() {
  Criterion c{10, "certificates pass on the bisected small-T examples and fail by name when m_hi breaks the discriminant"};
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    auto s = ModelSpec::benchmark(m);
    const double expected = m == Mode::StateDep ? kStateHorizon : kCtrlHorizon;
    const double T = certified_horizon(s, 1e-4, 1.0, 40);
    c.require(std::abs(T / expected - 1.0) < 1e-9, fmt("%s: bisected T = %.12g (regression %.12g)", mode_name(m), T, expected));
    s.T = T;
    const auto cert = certify(s, s.grid());
    c.require(cert.verdict, fmt("%s: verdict at T = %.6g", mode_name(m), T));
  }
  auto s = ModelSpec::benchmark(Mode::CtrlDep);
  s.T = kCtrlHorizon;
  auto k = ctrldep::default_constants(s, s.grid());
  k.m_hi = 1.5;
  const auto cert = ctrldep::certify(s, s.grid(), k);
  const auto f = cert.failures();
  const bool named = !cert.verdict && std::find(f.begin(), f.end(), "discriminant>=0") != f.end();
  c.require(named, fmt("ctrl m_hi=1.5: verdict %s, discriminant slack %.5f", cert.verdict ? "true" : "false",
                       cert.margin("discriminant>=0").slack));
  return c;
}

Criterion rk4_order() {
  Criterion c{11, "RK4 error ratio in [12, 20] on halving 20 -> 40 steps, both coefficient systems and the closed-loop rule"};
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    const auto s = ModelSpec::benchmark(m);
    const auto ref = solve(s, TimeGrid(1.0, 20480)).coeffs.values.front().pack();
    auto err = [&](std::size_t n) {
      const auto y = solve(s, TimeGrid(1.0, n)).coeffs.values.front().pack();
      double e = 0.0;
      for (int i = 0; i < 6; ++i) e = std::max(e, std::abs(y[i] - ref[i]));
      return e;
    };
    const double ratio = err(20) / err(40);
    c.require(ratio >= 12.0 && ratio <= 20.0, fmt("%s coefficients: ratio %.3f", mode_name(m), ratio));
  }
  const auto s = ModelSpec::benchmark();
  const double ref = closed_loop_nonrobust(s, TimeGrid(1.0, 100000)).alpha.front()[0];
  auto err = [&](std::size_t n) { return std::abs(closed_loop_nonrobust(s, TimeGrid(1.0, n)).alpha.front()[0] - ref); };
  const double ratio = err(20) / err(40);
  c.require(ratio >= 12.0 && ratio <= 20.0, fmt("closed-loop rule: ratio %.3f", ratio));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Criterion()>> all = {terminal_identity, risk_limits, ctrl_terminal, open_loop_limit,
                                                       frontier_closure,  relations,   residual_check, spikes,
                                                       monte_carlo,       certificates, rk4_order};
  int failed = 0;
  int evaluated = 0;
  for (const auto& run : all) {
    Criterion c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.pass = false;
      c.details.push_back(std::string("FAIL  unexpected error: ") + e.what());
    }
    ++evaluated;
    if (!c.pass) ++failed;
    std::printf("[%s] %2d  %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str());
    for (const auto& d : c.details) std::printf("          %s\n", d.c_str());
  }
  std::printf("criteria: %d evaluated, %d passed, %d failed\n", evaluated, evaluated - failed, failed);
  return failed;
}
