#include <doctest.h>

#include <cmath>

#include "rlq/errors.hpp"
#include "rlq/mv.hpp"
#include "rlq/verify.hpp"

using namespace rlq;

namespace {

Eigen::VectorXd vec(double v) { return Eigen::VectorXd::Constant(1, v); }

const SolveResult& bench(Mode mode) {
  static const SolveResult state = solve(ModelSpec::benchmark(Mode::StateDep));
  static const SolveResult ctrl = solve(ModelSpec::benchmark(Mode::CtrlDep));
  return mode == Mode::StateDep ? state : ctrl;
}

}  // namespace

TEST_CASE("residuals vanish on solved paths") {
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    const auto r = residuals(ModelSpec::benchmark(m), bench(m));
    CHECK(r.max_rho_zeta < 1e-8);
    CHECK(r.max_rho_x < 1e-8);
    CHECK(r.min_sigma >= 0.0);
  }
}

TEST_CASE("residuals see a corrupted investment rule") {
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    SolveResult bad = bench(m);
    for (auto& a : bad.policy.alpha) a *= 1.01;
    CHECK(residuals(ModelSpec::benchmark(m), bad).max_rho_x > 1e-4);
  }
}

TEST_CASE("two drivers with state loading") {
  ModelSpec s;
  s.d = 2;
  s.A = Schedule(0.03);
  s.B = {Schedule(0.3), Schedule(0.2)};
  s.C = {Schedule(0.1), Schedule(0.05)};
  s.D = {Schedule(1.0), Schedule(0.8)};
  s.R = Schedule(0.1);
  s.G = 1.2;
  s.mu1 = 0.5;
  s.xi = 5.0;
  const auto r = residuals(s, solve(s));
  CHECK(r.max_rho_zeta < 1e-8);
  CHECK(r.max_rho_x < 1e-8);
}

TEST_CASE("counter-based stream") {
  CHECK(splitmix_at(7, 0) == splitmix_at(7, 0));
  CHECK(splitmix_at(7, 0) != splitmix_at(7, 1));
  CHECK(splitmix_at(7, 0) != splitmix_at(8, 0));
}

TEST_CASE("change-of-measure Monte Carlo") {
  const auto s = ModelSpec::benchmark();
  const auto& r = bench(Mode::StateDep);

  SUBCASE("benchmark") {
    const auto mc = mc_cross_check(r.policy, s, s.grid(), 100000, 7);
    CHECK(mc.n_paths == 100000);
    CHECK(mc.seed == 7);
    CHECK(mc.zeta.target == 1.0);
    CHECK(mc.zeta.std_error > 0.0);
    CHECK(std::abs(mc.zeta.z) < 4.0);
    CHECK(std::abs(mc.zeta_x.z) < 4.0);
    CHECK(std::abs(mc.zeta_x2.z) < 4.0);
    const auto st = terminal_stats(r.policy, s, s.grid());
    CHECK(mc.zeta_x.target == st.mean);
    CHECK(mc.zeta_x2.target == doctest::Approx(st.variance + st.mean * st.mean).epsilon(1e-15));
  }
  SUBCASE("same seed is bitwise reproducible") {
    const auto a = mc_cross_check(r.policy, s, s.grid(), 5000, 11);
    const auto b = mc_cross_check(r.policy, s, s.grid(), 5000, 11);
    CHECK(a.zeta_x.estimate == b.zeta_x.estimate);
    CHECK(a.zeta_x2.std_error == b.zeta_x2.std_error);
  }
  SUBCASE("different seeds agree within their errors") {
    const auto a = mc_cross_check(r.policy, s, s.grid(), 20000, 1);
    const auto b = mc_cross_check(r.policy, s, s.grid(), 20000, 2);
    CHECK(a.zeta_x.estimate != b.zeta_x.estimate);
    CHECK(std::abs(a.zeta_x.estimate - b.zeta_x.estimate) <
          4.0 * std::hypot(a.zeta_x.std_error, b.zeta_x.std_error));
  }
  SUBCASE("no investment means deterministic wealth") {
    auto p = r.policy;
    for (auto& a : p.alpha) a.setZero();
    const auto mc = mc_cross_check(p, s, s.grid(), 1000, 3);
    CHECK(mc.zeta_x.estimate == doctest::Approx(std::exp(0.02) * mc.zeta.estimate).epsilon(1e-12));
    CHECK(mc.zeta_x2.estimate == doctest::Approx(std::exp(0.04) * mc.zeta.estimate).epsilon(1e-12));
  }
  SUBCASE("too few paths") { CHECK_THROWS_AS(mc_cross_check(r.policy, s, s.grid(), 99, 1), ValidationError); }
  SUBCASE("ctrl mode") {
    const auto c = ModelSpec::benchmark(Mode::CtrlDep);
    const auto mc = mc_cross_check(bench(Mode::CtrlDep).policy, c, c.grid(), 100000, 7);
    CHECK(std::abs(mc.zeta.z) < 4.0);
    CHECK(std::abs(mc.zeta_x.z) < 4.0);
    CHECK(std::abs(mc.zeta_x2.z) < 4.0);
  }
}

TEST_CASE("spike quotients") {
  for (Mode m : {Mode::StateDep, Mode::CtrlDep}) {
    CAPTURE(to_string(m));
    const auto s = ModelSpec::benchmark(m);
    const auto& r = bench(m);

    SUBCASE("zero perturbation") {
      CHECK(spike_quotient(SpikeKind::U, vec(0.0), 1e-3, s, r) == 0.0);
      CHECK(spike_quotient(SpikeKind::H, vec(0.0), 1e-3, s, r) == 0.0);
    }
    SUBCASE("u-spike converges to half Sigma") {
      const auto rep = spike_ladder(SpikeKind::U, vec(1.0), s, r);
      REQUIRE(rep.quotients.size() == 3);
      CHECK(rep.predicted == doctest::Approx(0.5 * r.policy.sigma_min.front()).epsilon(1e-12));
      CHECK(std::abs(rep.quotients.back() / rep.predicted - 1.0) < 0.01);
      // Leading error is linear in eps: successive gaps shrink about tenfold.
      const double g1 = rep.quotients[0] - rep.quotients[1];
      const double g2 = rep.quotients[1] - rep.quotients[2];
      CHECK(g1 / g2 == doctest::Approx(10.0).epsilon(0.2));
    }
    SUBCASE("u-spikes never help") {
      for (double v : {-2.0, -0.5, 0.3, 1.5}) CHECK(spike_quotient(SpikeKind::U, vec(v), 1e-3, s, r) >= 0.0);
    }
    SUBCASE("h-spikes never help the adversary") {
      for (double eta : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0})
        CHECK(spike_quotient(SpikeKind::H, vec(eta), 1e-4, s, r) <= 1e-6);
    }
  }
}

TEST_CASE("spike ladder must decrease") {
  const auto s = ModelSpec::benchmark();
  CHECK_THROWS_AS(spike_ladder(SpikeKind::U, Eigen::VectorXd::Ones(1), s, bench(Mode::StateDep), {1e-3, 1e-2}),
                  ValidationError);
}

TEST_CASE("reports serialize") {
  const auto s = ModelSpec::benchmark();
  const auto j = to_json(spike_ladder(SpikeKind::H, vec(0.5), s, bench(Mode::StateDep)));
  CHECK(j.at("kind") == "h");
  CHECK(j.at("quotients").size() == 3);
  const auto mc = to_json(mc_cross_check(bench(Mode::StateDep).policy, s, s.grid(), 200, 1));
  CHECK(mc.contains("zeta_x2"));
}

TEST_CASE("u-spikes follow Sigma when it turns negative") {
  // Large risk aversion at xi = 10 drives h* to -B, and the -xi|h|^2 source
  // pulls P(0;0) below zero; the moment-based quotient must see the same sign.
  auto s = ModelSpec::benchmark();
  s.mu1 = 100.0;
  const auto r = solve(s);
  REQUIRE(r.policy.sigma_min.front() < -0.3);
  const auto rep = spike_ladder(SpikeKind::U, vec(1.0), s, r);
  CHECK(rep.quotients.back() < 0.0);
  CHECK(std::abs(rep.quotients.back() / rep.predicted - 1.0) < 0.01);
}
