#include "rlq/config.hpp"

#include <fstream>

#include "rlq/errors.hpp"

namespace rlq {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view key, std::string_view why) {
  throw ValidationError("config key '" + std::string(key) + "': " + std::string(why));
}

double number(const json& j, std::string_view key) {
  if (!j.is_number()) fail(key, "expected a number");
  return j.get<double>();
}

const json& required(const json& config, std::string_view key) {
  auto it = config.find(key);
  if (it == config.end()) fail(key, "missing");
  return *it;
}

Schedule schedule(const json& j, std::string_view key) {
  if (j.is_number()) return Schedule(j.get<double>());
  if (j.is_object()) {
    auto it = j.find("table");
    if (it == j.end() || !it->is_array() || it->empty()) fail(key, "expected {\"table\": [[t, v], ...]}");
    std::vector<Schedule::Knot> knots;
    for (const auto& row : *it) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
        fail(key, "table rows must be [t, v] number pairs");
      knots.emplace_back(row[0].get<double>(), row[1].get<double>());
    }
    return Schedule::table(std::move(knots));
  }
  fail(key, "expected a number or a table object");
}

std::vector<Schedule> schedules(const json& j, std::string_view key, std::size_t d) {
  if (j.is_array()) {
    if (j.size() != d) fail(key, "expected " + std::to_string(d) + " entries");
    std::vector<Schedule> out;
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(schedule(j[i], std::string(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  return std::vector<Schedule>(d, schedule(j, key));
}

json schedule_json(const Schedule& s) {
  if (s.is_constant()) return s.at(0.0);
  json rows = json::array();
  for (const auto& [t, v] : s.knots()) rows.push_back({t, v});
  return json{{"table", rows}};
}

}  // namespace

ModelSpec parse_model(const json& config) {
  if (!config.is_object()) throw ValidationError("config: expected a JSON object");
  ModelSpec s;

  const json& mode = required(config, "mode");
  if (!mode.is_string()) fail("mode", "expected \"state_dep\" or \"ctrl_dep\"");
  const auto m = mode.get<std::string>();
  if (m == "state_dep") {
    s.mode = Mode::StateDep;
  } else if (m == "ctrl_dep") {
    s.mode = Mode::CtrlDep;
  } else {
    fail("mode", "expected \"state_dep\" or \"ctrl_dep\"");
  }

  s.T = number(required(config, "T"), "T");
  s.x0 = number(required(config, "x0"), "x0");
  s.G = number(required(config, "G"), "G");
  s.nu = number(required(config, "nu"), "nu");
  s.mu1 = number(required(config, "mu1"), "mu1");
  s.xi = number(required(config, "xi"), "xi");

  if (auto it = config.find("steps"); it != config.end()) {
    if (!it->is_number_integer() || it->get<long long>() <= 0) fail("steps", "expected a positive integer");
    s.steps = it->get<std::size_t>();
  }

  const json& b = required(config, "B");
  if (auto it = config.find("d"); it != config.end()) {
    if (!it->is_number_integer() || it->get<long long>() <= 0) fail("d", "expected a positive integer");
    s.d = it->get<std::size_t>();
  } else {
    s.d = b.is_array() ? b.size() : 1;
    if (s.d == 0) fail("B", "must not be empty");
  }

  s.A = schedule(required(config, "A"), "A");
  s.B = schedules(b, "B", s.d);
  s.D = schedules(required(config, "D"), "D", s.d);
  s.C = config.contains("C") ? schedules(config["C"], "C", s.d) : std::vector<Schedule>(s.d, Schedule(0.0));
  s.Q = config.contains("Q") ? schedule(config["Q"], "Q") : Schedule(0.0);
  s.R = config.contains("R") ? schedule(config["R"], "R") : Schedule(0.0);
  return s;
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json config;
  try {
    in >> config;
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_model(config);
}

json to_json(const ModelSpec& spec) {
  auto vec = [](const std::vector<Schedule>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back(schedule_json(s));
    return a;
  };
  return json{{"mode", to_string(spec.mode)},
              {"T", spec.T},
              {"steps", spec.steps},
              {"d", spec.d},
              {"x0", spec.x0},
              {"G", spec.G},
              {"nu", spec.nu},
              {"mu1", spec.mu1},
              {"xi", spec.xi},
              {"A", schedule_json(spec.A)},
              {"B", vec(spec.B)},
              {"C", vec(spec.C)},
              {"D", vec(spec.D)},
              {"Q", schedule_json(spec.Q)},
              {"R", schedule_json(spec.R)}};
}

}  // namespace rlq
