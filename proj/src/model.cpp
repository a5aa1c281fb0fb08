#include "rlq/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rlq/errors.hpp"

namespace rlq {

namespace {

constexpr double kTimeSlack = 1e-12;

bool close_time(double a, double b) {
  return std::abs(a - b) <= kTimeSlack * std::max(1.0, std::abs(b));
}

}  // namespace

Schedule Schedule::table(std::vector<Knot> knots) {
  if (knots.empty()) throw ValidationError("schedule table needs at least one knot");
  Schedule s;
  s.knots_ = std::move(knots);
  return s;
}

double Schedule::at(double t) const {
  if (knots_.empty()) return constant_;
  const double lo = knots_.front().first;
  const double hi = knots_.back().first;
  if (t < lo) {
    if (!close_time(t, lo)) throw ValidationError("schedule evaluated before its first knot");
    return knots_.front().second;
  }
  if (t > hi) {
    if (!close_time(t, hi)) throw ValidationError("schedule evaluated after its last knot");
    return knots_.back().second;
  }
  auto upper = std::upper_bound(knots_.begin(), knots_.end(), t,
                                [](double v, const Knot& k) { return v < k.first; });
  if (upper == knots_.end()) return knots_.back().second;
  auto lower = std::prev(upper);
  const double span = upper->first - lower->first;
  const double w = (t - lower->first) / span;
  return lower->second + w * (upper->second - lower->second);
}

bool Schedule::is_identically_zero() const noexcept {
  if (knots_.empty()) return constant_ == 0.0;
  return std::all_of(knots_.begin(), knots_.end(), [](const Knot& k) { return k.second == 0.0; });
}

double Schedule::min_value() const noexcept {
  if (knots_.empty()) return constant_;
  double m = knots_.front().second;
  for (const auto& k : knots_) m = std::min(m, k.second);
  return m;
}

double Schedule::max_value() const noexcept {
  if (knots_.empty()) return constant_;
  double m = knots_.front().second;
  for (const auto& k : knots_) m = std::max(m, k.second);
  return m;
}

const char* to_string(Mode mode) noexcept {
  return mode == Mode::StateDep ? "state_dep" : "ctrl_dep";
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("T: horizon must be positive");
  if (steps == 0) throw ValidationError("steps: must be a positive integer");
}

bool ModelSpec::c_is_zero() const noexcept {
  return std::all_of(C.begin(), C.end(), [](const Schedule& s) { return s.is_identically_zero(); });
}

ModelSpec ModelSpec::benchmark(Mode mode) {
  ModelSpec s;
  s.mode = mode;
  s.d = 1;
  s.T = 1.0;
  s.steps = 2000;
  s.x0 = 1.0;
  s.A = Schedule(0.02);
  s.B = {Schedule(0.375)};
  s.C = {Schedule(0.0)};
  s.D = {Schedule(1.0)};
  s.Q = Schedule(0.0);
  s.R = Schedule(0.0);
  s.G = 1.0;
  s.nu = 1.0;
  s.mu1 = 2.0;
  s.xi = 10.0;
  return s;
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << field;
  if (node) os << " (node " << *node << ")";
  os << ": " << message;
  return os.str();
}

namespace {

void check_knots(const std::string& field, const Schedule& s, double T, std::vector<Violation>& out) {
  if (s.is_constant()) return;
  const auto& k = s.knots();
  if (!std::isfinite(T) || T <= 0.0) return;
  if (k.front().first != 0.0) out.push_back({field, std::nullopt, "first knot time must be 0"});
  if (!close_time(k.back().first, T)) out.push_back({field, std::nullopt, "last knot time must equal T"});
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (!(k[i].first > k[i - 1].first)) {
      out.push_back({field, std::nullopt, "knot times must be strictly increasing"});
      break;
    }
  }
  for (const auto& [t, v] : k) {
    if (!std::isfinite(t) || !std::isfinite(v)) {
      out.push_back({field, std::nullopt, "knots must be finite"});
      break;
    }
  }
}

std::string indexed(const char* name, std::size_t j) {
  return std::string(name) + "[" + std::to_string(j) + "]";
}

}  // namespace

std::vector<Violation> validate(const ModelSpec& spec) {
  std::vector<Violation> out;

  if (spec.d == 0) out.push_back({"d", std::nullopt, "must be a positive integer"});
  if (!(spec.T > 0.0) || !std::isfinite(spec.T)) out.push_back({"T", std::nullopt, "must be positive"});
  if (spec.steps == 0) out.push_back({"steps", std::nullopt, "must be a positive integer"});
  if (!(spec.x0 > 0.0)) out.push_back({"x0", std::nullopt, "must be positive"});

  check_knots("A", spec.A, spec.T, out);
  if (spec.B.size() != spec.d) out.push_back({"B", std::nullopt, "needs d entries"});
  if (spec.C.size() != spec.d) out.push_back({"C", std::nullopt, "needs d entries"});
  if (spec.D.size() != spec.d) out.push_back({"D", std::nullopt, "needs d entries"});
  for (std::size_t j = 0; j < spec.B.size(); ++j) check_knots(indexed("B", j), spec.B[j], spec.T, out);
  for (std::size_t j = 0; j < spec.C.size(); ++j) check_knots(indexed("C", j), spec.C[j], spec.T, out);
  for (std::size_t j = 0; j < spec.D.size(); ++j) check_knots(indexed("D", j), spec.D[j], spec.T, out);
  check_knots("Q", spec.Q, spec.T, out);
  check_knots("R", spec.R, spec.T, out);

  if (!(spec.G >= 0.0)) out.push_back({"G", std::nullopt, "must be >= 0"});
  if (!(spec.nu >= 0.0)) out.push_back({"nu", std::nullopt, "must be >= 0"});
  if (!(spec.mu1 >= 0.0)) out.push_back({"mu1", std::nullopt, "must be >= 0"});
  if (!(spec.xi > 0.0)) out.push_back({"xi", std::nullopt, "must be > 0"});

  const bool c_zero = spec.c_is_zero();
  if (spec.mode == Mode::CtrlDep) {
    if (!c_zero) out.push_back({"C", std::nullopt, "C must be 0 in CtrlDep mode"});
    for (std::size_t j = 1; j < spec.D.size(); ++j) {
      if (!(spec.D[j] == spec.D[0])) {
        out.push_back({"D", std::nullopt, "D must be a single scalar schedule in CtrlDep mode"});
        break;
      }
    }
  } else if (!c_zero && spec.G < spec.nu) {
    out.push_back({"G", std::nullopt, "G >= nu is required when C is not identically 0"});
  }

  // Node-level sign conditions need a well-formed grid and in-range schedules.
  const bool grid_ok = spec.T > 0.0 && std::isfinite(spec.T) && spec.steps > 0;
  const bool knots_ok = std::none_of(out.begin(), out.end(), [](const Violation& v) {
    return v.message.find("knot") != std::string::npos;
  });
  if (grid_ok && knots_ok) {
    const TimeGrid grid(spec.T, spec.steps);
    bool q_bad = false;
    bool r_bad = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!q_bad && !(spec.Q.at(grid[k]) >= 0.0)) {
        out.push_back({"Q", k, "must be >= 0"});
        q_bad = true;
      }
      if (!r_bad && !(spec.R.at(grid[k]) >= 0.0)) {
        out.push_back({"R", k, "must be >= 0"});
        r_bad = true;
      }
    }
  }
  return out;
}

NodeCoeffs coeffs_at(const ModelSpec& spec, double t) {
  if (t < 0.0 && !close_time(t, 0.0)) throw ValidationError("coefficient evaluation before t = 0");
  if (t > spec.T && !close_time(t, spec.T)) throw ValidationError("coefficient evaluation after t = T");
  NodeCoeffs c;
  c.t = t;
  c.A = spec.A.at(t);
  c.B.resize(static_cast<Eigen::Index>(spec.d));
  c.C.resize(static_cast<Eigen::Index>(spec.d));
  c.D.resize(static_cast<Eigen::Index>(spec.d));
  for (std::size_t j = 0; j < spec.d; ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    c.B[i] = spec.B.at(j).at(t);
    c.C[i] = spec.C.at(j).at(t);
    c.D[i] = spec.D.at(j).at(t);
  }
  c.Q = spec.Q.at(t);
  c.R = spec.R.at(t);
  return c;
}

std::vector<NodeCoeffs> sample(const ModelSpec& spec, const TimeGrid& grid) {
  std::vector<NodeCoeffs> out;
  out.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out.push_back(coeffs_at(spec, grid[k]));
  return out;
}

}  // namespace rlq
