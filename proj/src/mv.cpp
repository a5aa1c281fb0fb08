#include "rlq/mv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

#include "rlq/errors.hpp"

namespace rlq {

double TerminalStats::std_dev() const { return std::sqrt(std::max(variance, 0.0)); }

TerminalStats terminal_stats(const std::vector<Eigen::VectorXd>& alpha, const std::vector<Eigen::VectorXd>& h,
                             const ModelSpec& spec, const TimeGrid& grid) {
  if (alpha.size() != grid.size() || (!h.empty() && h.size() != grid.size())) {
    throw ValidationError("terminal_stats: path length does not match grid");
  }
  const double dt = grid.dt();
  double drift = 0.0;
  double a2 = 0.0;
  double prev_drift = 0.0;
  double prev_a2 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const NodeCoeffs c = coeffs_at(spec, grid[k]);
    const Eigen::VectorXd tilt = h.empty() ? c.B : Eigen::VectorXd(c.B + h[k]);
    const double cur_drift = c.A + tilt.dot(alpha[k]);
    const double cur_a2 = alpha[k].squaredNorm();
    if (k > 0) {
      drift += 0.5 * dt * (prev_drift + cur_drift);
      a2 += 0.5 * dt * (prev_a2 + cur_a2);
    }
    prev_drift = cur_drift;
    prev_a2 = cur_a2;
  }
  TerminalStats s;
  s.drift_integral = drift;
  s.alpha2_integral = a2;
  s.mean = spec.x0 * std::exp(drift);
  s.variance = spec.x0 * spec.x0 * std::exp(2.0 * drift) * std::expm1(a2);
  return s;
}

TerminalStats terminal_stats(const Policy& policy, const ModelSpec& spec, const TimeGrid& grid) {
  return terminal_stats(policy.alpha, policy.h, spec, grid);
}

TerminalStats terminal_stats(const BaselinePath& path, const ModelSpec& spec, const TimeGrid& grid) {
  return terminal_stats(path.alpha, {}, spec, grid);
}

const char* to_string(RowStatus s) noexcept {
  switch (s) {
    case RowStatus::Ok:
      return "ok";
    case RowStatus::Degenerate:
      return "degenerate";
    case RowStatus::SolverFailure:
      return "solver_failure";
  }
  return "?";
}

std::size_t sweep_threads() {
  if (const char* env = std::getenv("RLQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

FrontierPoint evaluate_row(ModelSpec spec, const TimeGrid& grid, double swept, double mu1, double xi) {
  spec.mu1 = mu1;
  spec.xi = xi;
  FrontierPoint row;
  row.swept = swept;
  row.mu1 = mu1;
  row.xi = xi;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    const SolveResult r = solve(spec, grid);
    const TerminalStats s = terminal_stats(r.policy, spec, grid);
    row.mean = s.mean;
    row.std_dev = s.std_dev();
    row.alpha0 = r.policy.alpha.front();
    if (!r.notes.empty()) row.message = r.notes.front();
  } catch (const DegenerateCase& e) {
    row.status = RowStatus::Degenerate;
    row.message = e.what();
  } catch (const SolverError& e) {
    row.status = RowStatus::SolverFailure;
    row.message = e.what();
  }
  if (row.status != RowStatus::Ok) {
    row.mean = row.std_dev = nan;
    row.alpha0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.d), nan);
  }
  return row;
}

struct RowJob {
  double swept, mu1, xi;
};

std::vector<FrontierPoint> run_rows(const ModelSpec& spec, const TimeGrid& grid, const std::vector<RowJob>& jobs) {
  for (const auto& v : validate(spec)) {
    // mu1 and xi are overwritten per row.
    if (v.field != "mu1" && v.field != "xi") throw ValidationError(v.describe());
  }
  std::vector<FrontierPoint> rows(jobs.size());
  const std::size_t workers = std::min(sweep_threads(), jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = evaluate_row(spec, grid, jobs[i].swept, jobs[i].mu1, jobs[i].xi);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
          rows[i] = evaluate_row(spec, grid, jobs[i].swept, jobs[i].mu1, jobs[i].xi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace

std::vector<FrontierPoint> sweep_risk(const ModelSpec& spec, const TimeGrid& grid, const std::vector<double>& mu1) {
  std::vector<RowJob> jobs;
  for (double m : mu1) {
    if (!(m >= 0.0)) throw ValidationError("values: mu1 must be >= 0");
    jobs.push_back({m, m, spec.xi});
  }
  return run_rows(spec, grid, jobs);
}

std::vector<FrontierPoint> sweep_ambiguity(const ModelSpec& spec, const TimeGrid& grid, const std::vector<double>& xi) {
  std::vector<RowJob> jobs;
  for (double x : xi) {
    if (!(x > 0.0)) throw ValidationError("values: xi must be > 0");
    jobs.push_back({x, spec.mu1, x});
  }
  return run_rows(spec, grid, jobs);
}

std::vector<FrontierPoint> relation_sweep(const ModelSpec& spec, const TimeGrid& grid, const Relation& relation,
                                          const std::vector<double>& mu1) {
  std::vector<RowJob> jobs;
  for (double m : mu1) {
    if (!(m >= 0.0)) throw ValidationError("values: mu1 must be >= 0");
    const double xi = relation.xi(m);
    if (!(xi > 0.0)) throw ValidationError("relation: xi = " + std::to_string(xi) + " is not positive");
    jobs.push_back({m, m, xi});
  }
  return run_rows(spec, grid, jobs);
}

std::vector<double> parse_range(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(v)) throw ValidationError("values: cannot parse '" + s + "'");
    return v;
  };
  const auto c1 = text.find(':');
  if (c1 == std::string::npos) return {number(text)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ValidationError("values: expected a:b:step, got '" + text + "'");
  const double a = number(text.substr(0, c1));
  const double b = number(text.substr(c1 + 1, c2 - c1 - 1));
  const double step = number(text.substr(c2 + 1));
  if (!(step > 0.0)) throw ValidationError("values: step must be > 0");
  if (b < a) throw ValidationError("values: range end is below its start");
  const double span = (b - a) / step;
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span)));
  std::vector<double> out;
  out.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
  // Land exactly on b when the step divides the range.
  if (std::abs(out.back() - b) <= 1e-9 * std::max(1.0, std::abs(b))) out.back() = b;
  return out;
}

}  // namespace rlq
