#include "rlq/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rlq/ctrldep.hpp"
#include "rlq/errors.hpp"
#include "rlq/statedep.hpp"

namespace rlq {

namespace {
constexpr double kMarginTolerance = 1e-12;
}

CoeffValues terminal_values(const ModelSpec& spec) noexcept {
  return {spec.G / 2.0, spec.nu, spec.mu1, spec.G, spec.nu, spec.mu1};
}

SolveResult solve(const ModelSpec& spec, const TimeGrid& grid) {
  return spec.mode == Mode::StateDep ? statedep::solve(spec, grid) : ctrldep::solve(spec, grid);
}

std::vector<double> linear_backward_closed_form(const TimeGrid& grid, const std::vector<double>& rate,
                                                const std::vector<double>& source, double terminal) {
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  // K_k = int_{t_k}^T rate, S_k = int_{t_k}^T e^{-K(v)} source(v) dv.
  std::vector<double> out(n + 1);
  double K = 0.0;
  double S = 0.0;
  double prev_weight = source[n];
  out[n] = terminal;
  for (std::size_t k = n; k-- > 0;) {
    K += 0.5 * dt * (rate[k] + rate[k + 1]);
    const double weight = std::exp(-K) * source[k];
    S += 0.5 * dt * (weight + prev_weight);
    prev_weight = weight;
    out[k] = std::exp(K) * (terminal + S);
  }
  return out;
}

std::vector<double> p_second_order(const ModelSpec& spec, const TimeGrid& grid, const std::vector<Eigen::VectorXd>& h,
                                   double terminal_weight, double penalty_weight) {
  std::vector<double> rate(grid.size());
  std::vector<double> source(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const NodeCoeffs c = coeffs_at(spec, grid[k]);
    rate[k] = 2.0 * c.A + 2.0 * c.C.dot(h[k]) + c.C.squaredNorm();
    source[k] = c.Q - penalty_weight * h[k].squaredNorm();
  }
  return linear_backward_closed_form(grid, rate, source, terminal_weight);
}

Certificate certify(const ModelSpec& spec, const TimeGrid& grid) {
  return spec.mode == Mode::StateDep ? statedep::certify(spec, grid) : ctrldep::certify(spec, grid);
}

double certified_horizon(ModelSpec spec, double t_pass, double t_fail, int iterations) {
  auto passes = [&](double T) {
    spec.T = T;
    try {
      return certify(spec, spec.grid()).verdict;
    } catch (const SolverError&) {
      return false;
    }
  };
  if (!passes(t_pass)) throw ValidationError("horizon: certificate fails at the lower bracket");
  if (passes(t_fail)) throw ValidationError("horizon: certificate holds at the upper bracket");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (t_pass + t_fail);
    (passes(mid) ? t_pass : t_fail) = mid;
  }
  return t_pass;
}

bool Margin::ok() const noexcept { return slack >= -kMarginTolerance; }

void MarginTracker::observe(double slack, std::size_t node, double t) {
  if (!seen_ || slack < m_.slack || std::isnan(slack)) {
    if (seen_ && std::isnan(m_.slack)) return;
    m_.slack = slack;
    m_.node = node;
    m_.t = t;
    seen_ = true;
  }
}

const Margin& Certificate::margin(const std::string& name) const {
  for (const auto& m : margins)
    if (m.name == name) return m;
  throw std::out_of_range("no certificate margin named " + name);
}

std::vector<std::string> Certificate::failures() const {
  std::vector<std::string> out;
  for (const auto& m : margins)
    if (!m.ok()) out.push_back(m.name);
  return out;
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const Certificate& cert) {
  using nlohmann::json;
  json margins = json::array();
  for (const auto& m : cert.margins) {
    margins.push_back(
        {{"name", m.name}, {"slack", finite_or_null(m.slack)}, {"node", m.node}, {"t", m.t}, {"ok", m.ok()}});
  }
  json env = json::object();
  for (const auto& [name, values] : cert.envelopes) {
    json arr = json::array();
    for (double v : values) arr.push_back(finite_or_null(v));
    env[name] = std::move(arr);
  }
  return json{{"mode", to_string(cert.mode)}, {"verdict", cert.verdict},       {"constants", cert.constants},
              {"failures", cert.failures()},  {"margins", std::move(margins)}, {"t", cert.t},
              {"envelopes", std::move(env)}};
}

nlohmann::json to_json(const SolveResult& r) {
  using nlohmann::json;
  const auto& p = r.policy;
  const std::size_t last = p.t.size() - 1;
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  double sigma_min = std::numeric_limits<double>::infinity();
  for (double s : p.sigma_min) sigma_min = std::min(sigma_min, s);
  return json{{"mode", to_string(r.mode)},
              {"alpha_0", vec(p.alpha.front())},
              {"h_0", vec(p.h.front())},
              {"alpha_T", vec(p.alpha[last])},
              {"h_T", vec(p.h[last])},
              {"min_sigma", sigma_min},
              {"min_abs_alpha", r.min_abs_alpha},
              {"notes", r.notes}};
}

}  // namespace rlq
