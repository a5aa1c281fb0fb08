#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "rlq/baseline.hpp"
#include "rlq/errors.hpp"
#include "rlq/mv.hpp"
#include "rlq/statedep.hpp"

using namespace rlq;

namespace {

std::vector<Eigen::VectorXd> constant_path(std::size_t n, double v) {
  return std::vector<Eigen::VectorXd>(n, Eigen::VectorXd::Constant(1, v));
}

bool same_row(const FrontierPoint& a, const FrontierPoint& b) {
  auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  bool alpha = a.alpha0.size() == b.alpha0.size();
  for (Eigen::Index j = 0; alpha && j < a.alpha0.size(); ++j) alpha = eq(a.alpha0[j], b.alpha0[j]);
  return alpha && eq(a.swept, b.swept) && eq(a.mu1, b.mu1) && eq(a.xi, b.xi) && eq(a.mean, b.mean) &&
         eq(a.std_dev, b.std_dev) && a.status == b.status;
}

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) {
    if (const char* old = std::getenv("RLQ_THREADS")) old_ = old, had_ = true;
    setenv("RLQ_THREADS", value, 1);
  }
  ~ThreadsEnv() {
    if (had_) setenv("RLQ_THREADS", old_.c_str(), 1);
    else unsetenv("RLQ_THREADS");
  }

 private:
  std::string old_;
  bool had_ = false;
};

// tests/oracles/statedep.py, benchmark at mu1 = 2, xi = 10.
constexpr double kBenchMean = 1.175833588726;
constexpr double kBenchStd = 0.676661212839;

}  // namespace

TEST_CASE("terminal statistics") {
  const auto s = ModelSpec::benchmark();
  const auto g = s.grid();

  SUBCASE("zero investment") {
    const auto st = terminal_stats(constant_path(g.size(), 0.0), {}, s, g);
    CHECK(st.mean == doctest::Approx(std::exp(0.02)).epsilon(1e-14));
    CHECK(st.variance == 0.0);
    CHECK(st.std_dev() == 0.0);
  }
  SUBCASE("constant pair") {
    const auto st = terminal_stats(constant_path(g.size(), 0.5), constant_path(g.size(), -0.1), s, g);
    CHECK(st.mean == doctest::Approx(std::exp(0.1575)).epsilon(1e-13));
    CHECK(st.variance == doctest::Approx(std::exp(0.315) * (std::exp(0.25) - 1.0)).epsilon(1e-13));
    CHECK(st.mean == doctest::Approx(1.1705807579816938).epsilon(1e-13));
  }
  SUBCASE("x0 scaling") {
    auto s2 = s;
    s2.x0 = 2.0;
    const auto a = terminal_stats(constant_path(g.size(), 0.5), {}, s, g);
    const auto b = terminal_stats(constant_path(g.size(), 0.5), {}, s2, g);
    CHECK(b.mean == doctest::Approx(2.0 * a.mean).epsilon(1e-15));
    CHECK(b.variance == doctest::Approx(4.0 * a.variance).epsilon(1e-15));
  }
  SUBCASE("length mismatch") { CHECK_THROWS_AS(terminal_stats(constant_path(3, 0.5), {}, s, g), ValidationError); }
}

TEST_CASE("risk sweep") {
  const auto s = ModelSpec::benchmark();
  const auto rows = sweep_risk(s, s.grid(), {0.0, 2.0, 1e6});
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.status == RowStatus::Ok);
  CHECK(rows[0].alpha0[0] == 0.0);
  for (const auto* r : {&rows[0], &rows[2]}) {
    CHECK(std::abs(r->mean - std::exp(0.02)) < 1e-3);
    CHECK(r->std_dev < 1e-3);
  }
  CHECK(std::abs(rows[1].mean - kBenchMean) < 1e-8);
  CHECK(std::abs(rows[1].std_dev - kBenchStd) < 1e-8);
  CHECK(rows[1].xi == 10.0);
  CHECK(rows[1].swept == 2.0);
}

TEST_CASE("ctrl risk sweep flags mu1 = 0 and keeps going") {
  const auto s = ModelSpec::benchmark(Mode::CtrlDep);
  const auto rows = sweep_risk(s, s.grid(), {0.0, 2.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == RowStatus::Degenerate);
  CHECK(std::isnan(rows[0].mean));
  CHECK_FALSE(rows[0].message.empty());
  CHECK(rows[1].status == RowStatus::Ok);
  CHECK(rows[1].mean == doctest::Approx(1.090657096024).epsilon(1e-9));
}

TEST_CASE("ambiguity sweep") {
  const auto s = ModelSpec::benchmark();
  const auto rows = sweep_ambiguity(s, s.grid(), {1e8, 10.0});
  const auto open = terminal_stats(open_loop_nonrobust(s, s.grid()), s, s.grid());
  CHECK(std::abs(rows[0].mean - open.mean) < 1e-3);
  CHECK(std::abs(rows[0].std_dev - open.std_dev()) < 1e-3);
  const auto risk = sweep_risk(s, s.grid(), {2.0})[0];
  CHECK(rows[1].mean == risk.mean);
  CHECK(rows[1].std_dev == risk.std_dev);
  CHECK(rows[1].alpha0 == risk.alpha0);
  CHECK_THROWS_AS(sweep_ambiguity(s, s.grid(), {1.0, 0.0}), ValidationError);
}

TEST_CASE("strong ambiguity aversion") {
  auto s = ModelSpec::benchmark();
  s.xi = 1e-4;
  const auto r = statedep::solve(s, s.grid());
  CHECK(std::abs(r.policy.alpha[0][0]) < 0.01);
  CHECK(std::abs(r.policy.h[0][0] + 0.375) < 0.01);
}

TEST_CASE("relations") {
  const auto s = ModelSpec::benchmark();
  SUBCASE("linear settles") {
    const auto rows = relation_sweep(s, s.grid(), {Relation::Form::Linear, 5.0, 2.0}, {1e5, 1e6});
    REQUIRE(rows[0].status == RowStatus::Ok);
    REQUIRE(rows[1].status == RowStatus::Ok);
    CHECK(rows[0].xi == 5.0 + 2e5);
    CHECK(std::abs(rows[1].mean / rows[0].mean - 1.0) < 0.01);
  }
  SUBCASE("terminal identity on every row") {
    for (double mu1 : {0.5, 2.0, 30.0}) {
      for (const Relation rel : {Relation{Relation::Form::Linear, 5.0, 2.0}, Relation{Relation::Form::Quadratic, 0.0, 2.0}}) {
        auto t = s;
        t.mu1 = mu1;
        t.xi = rel.xi(mu1);
        t.T = 0.01;  // the quadratic form blows up on longer horizons at large mu1
        const auto r = statedep::solve(t, t.grid());
        CHECK(std::abs(r.policy.alpha.back()[0] - mu1 * 0.375 / (1.0 + mu1 * mu1 / t.xi)) < 1e-10);
      }
    }
  }
  SUBCASE("quadratic rows past the blow-up are recorded as failures") {
    const auto rows = relation_sweep(s, s.grid(), {Relation::Form::Quadratic, 0.0, 2.0}, {1.0, 3.0, 10.0});
    CHECK(rows[0].status == RowStatus::Ok);
    CHECK(rows[1].status == RowStatus::Ok);
    CHECK(rows[0].mean < rows[1].mean);
    CHECK(rows[2].status == RowStatus::SolverFailure);
    CHECK(rows[2].xi == 200.0);
    CHECK(std::isnan(rows[2].mean));
  }
  SUBCASE("non-positive xi rejected") {
    CHECK_THROWS_AS(relation_sweep(s, s.grid(), {Relation::Form::Linear, -1.0, 0.0}, {1.0}), ValidationError);
  }
}

TEST_CASE("sweeps are deterministic and thread-count independent") {
  const auto s = ModelSpec::benchmark();
  const auto g = TimeGrid(1.0, 400);
  const std::vector<double> mu = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0};
  std::vector<FrontierPoint> seq, par, again;
  {
    ThreadsEnv env("0");
    CHECK(sweep_threads() == 0);
    seq = sweep_risk(s, g, mu);
  }
  {
    ThreadsEnv env("4");
    CHECK(sweep_threads() == 4);
    par = sweep_risk(s, g, mu);
    again = sweep_risk(s, g, mu);
  }
  REQUIRE(seq.size() == mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    CHECK(seq[i].swept == mu[i]);
    CHECK(same_row(seq[i], par[i]));
    CHECK(same_row(par[i], again[i]));
  }
}

TEST_CASE("variance identity") {
  const auto s = ModelSpec::benchmark();
  for (double mu1 : {0.5, 2.0, 5.0}) {
    auto t = s;
    t.mu1 = mu1;
    const auto r = statedep::solve(t, t.grid());
    const auto st = terminal_stats(r.policy, t, t.grid());
    const double lhs = st.variance / (t.x0 * t.x0) * std::exp(-2.0 * st.drift_integral) + 1.0;
    CHECK(std::abs(lhs - std::exp(st.alpha2_integral)) < 1e-12);
  }
}

TEST_CASE("zero policy statistics ignore the preferences") {
  auto s = ModelSpec::benchmark();
  const auto g = s.grid();
  const auto a = terminal_stats(constant_path(g.size(), 0.0), constant_path(g.size(), -0.3), s, g);
  s.mu1 = 40.0;
  s.xi = 0.01;
  const auto b = terminal_stats(constant_path(g.size(), 0.0), constant_path(g.size(), 0.7), s, g);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
}

TEST_CASE("range parsing") {
  const auto v = parse_range("0:10:0.5");
  CHECK(v.size() == 21);
  CHECK(v.front() == 0.0);
  CHECK(v.back() == 10.0);
  CHECK(parse_range("0.1:0.3:0.1").size() == 3);
  CHECK(parse_range("0.1:0.3:0.1").back() == 0.3);
  const auto partial = parse_range("0:1:0.3");
  REQUIRE(partial.size() == 4);
  CHECK(partial.back() == doctest::Approx(0.9));
  CHECK(parse_range("7") == std::vector<double>{7.0});
  CHECK_THROWS_AS(parse_range("1:2"), ValidationError);
  CHECK_THROWS_AS(parse_range("2:1:0.1"), ValidationError);
  CHECK_THROWS_AS(parse_range("0:1:0"), ValidationError);
  CHECK_THROWS_AS(parse_range("abc"), ValidationError);
}

TEST_CASE("row status names") {
  CHECK(std::string(to_string(RowStatus::Ok)) == "ok");
  CHECK(std::string(to_string(RowStatus::Degenerate)) == "degenerate");
  CHECK(std::string(to_string(RowStatus::SolverFailure)) == "solver_failure");
}
