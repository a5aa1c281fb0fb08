#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rlq/baseline.hpp"
#include "rlq/config.hpp"
#include "rlq/csv.hpp"
#include "rlq/ctrldep.hpp"
#include "rlq/equilibrium.hpp"
#include "rlq/errors.hpp"
#include "rlq/mv.hpp"
#include "rlq/statedep.hpp"
#include "rlq/verify.hpp"

namespace rlq::cli {

namespace {

using nlohmann::json;

struct Common {
  std::string config;
  std::size_t steps = 0;

  ModelSpec load() const {
    ModelSpec spec = load_model(config);
    if (steps > 0) spec.steps = steps;
    const auto violations = validate(spec);
    if (!violations.empty()) {
      std::string msg = violations.front().describe();
      for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i].describe();
      throw ValidationError(msg);
    }
    return spec;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "model configuration JSON")->required()->check(CLI::ExistingFile);
  app->add_option("--steps", c.steps, "grid steps (overrides the config)")->check(CLI::PositiveNumber);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("out: cannot write " + path);
  return f;
}

std::vector<double> read_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("values-file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  for (char& ch : text)
    if (ch == ',' || ch == ';') ch = ' ';
  std::istringstream tokens(text);
  std::vector<double> out;
  for (std::string tok; tokens >> tok;) {
    const auto r = parse_range(tok);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (out.empty()) throw ValidationError("values-file: no values in " + path);
  return out;
}

std::vector<double> values_from(const std::string& spec, const std::string& file) {
  if (!spec.empty() && !file.empty()) throw ValidationError("values: give --values or --values-file, not both");
  if (!file.empty()) return read_values_file(file);
  if (spec.empty()) throw ValidationError("values: --values or --values-file is required");
  return parse_range(spec);
}

json certification_summary(const ModelSpec& spec, const TimeGrid& grid, const SolveResult& solved) {
  try {
    const Certificate cert = spec.mode == Mode::StateDep ? statedep::certify(spec, grid, std::nullopt, &solved)
                                                         : ctrldep::certify(spec, grid, std::nullopt, &solved);
    return {{"status", cert.verdict ? "certified" : "uncertified"}, {"failures", cert.failures()}};
  } catch (const ValidationError& e) {
    return {{"status", "uncertified"}, {"reason", e.what()}};
  }
}

int cmd_solve(const Common& c, const std::string& out_path, std::ostream& out) {
  const ModelSpec spec = c.load();
  const TimeGrid grid = spec.grid();
  const SolveResult r = solve(spec, grid);
  auto f = open_out(out_path);
  csv::write_policy(f, r);
  json meta = to_json(r);
  meta["steps"] = grid.steps();
  meta["certificate"] = certification_summary(spec, grid, r);
  out << meta.dump(2) << '\n';
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& vary, const std::vector<double>& values, const std::string& out_path) {
  const ModelSpec spec = c.load();
  const TimeGrid grid = spec.grid();
  const auto rows = vary == "mu1" ? sweep_risk(spec, grid, values) : sweep_ambiguity(spec, grid, values);
  auto f = open_out(out_path);
  csv::write_frontier(f, rows, spec.d);
  return kOk;
}

int cmd_relation(const Common& c, const Relation& rel, const std::vector<double>& values, const std::string& out_path) {
  const ModelSpec spec = c.load();
  const TimeGrid grid = spec.grid();
  const auto rows = relation_sweep(spec, grid, rel, values);
  auto f = open_out(out_path);
  csv::write_frontier(f, rows, spec.d);
  return kOk;
}

int cmd_baseline(const Common& c, const std::string& kind, const std::string& out_path) {
  const ModelSpec spec = c.load();
  const BaselinePath path = baseline(spec, spec.grid(), kind == "open" ? BaselineKind::OpenLoop : BaselineKind::ClosedLoop);
  auto f = open_out(out_path);
  csv::write_baseline(f, path);
  return kOk;
}

double constant_or(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(std::string("constants key '") + key + "': expected a number");
  return j[key].get<double>();
}

json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string(what) + ": cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

int cmd_certify(const Common& c, const std::string& constants_path, std::ostream& out) {
  const ModelSpec spec = c.load();
  const TimeGrid grid = spec.grid();
  json k = json::object();
  if (!constants_path.empty()) {
    k = read_json(constants_path, "constants");
    if (!k.is_object()) throw ValidationError("constants: expected a JSON object");
  }
  Certificate cert;
  if (spec.mode == Mode::StateDep) {
    static const std::vector<std::string> keys{"m_lo", "m_hi", "delta_lo", "e_lo"};
    for (const auto& [name, _] : k.items())
      if (std::find(keys.begin(), keys.end(), name) == keys.end())
        throw ValidationError("constants key '" + name + "': unknown for state_dep");
    auto d = statedep::default_constants(spec);
    d.m_lo = constant_or(k, "m_lo", d.m_lo);
    d.m_hi = constant_or(k, "m_hi", d.m_hi);
    d.delta_lo = constant_or(k, "delta_lo", d.delta_lo);
    d.e_lo = constant_or(k, "e_lo", d.e_lo);
    cert = statedep::certify(spec, grid, d);
  } else {
    static const std::vector<std::string> keys{"m_lo", "m_hi", "delta_hi", "e_hi", "phi"};
    for (const auto& [name, _] : k.items())
      if (std::find(keys.begin(), keys.end(), name) == keys.end())
        throw ValidationError("constants key '" + name + "': unknown for ctrl_dep");
    auto d = ctrldep::default_constants(spec, grid);
    d.m_lo = constant_or(k, "m_lo", d.m_lo);
    d.m_hi = constant_or(k, "m_hi", d.m_hi);
    d.delta_hi = constant_or(k, "delta_hi", d.delta_hi);
    d.e_hi = constant_or(k, "e_hi", d.e_hi);
    d.phi = constant_or(k, "phi", d.phi);
    cert = ctrldep::certify(spec, grid, d);
  }
  out << to_json(cert).dump(2) << '\n';
  return kOk;
}

struct VerifyOptions {
  std::size_t mc_paths = 0;
  std::uint64_t seed = 0;
  std::string spike;
  double mag = 1.0;
};

int cmd_verify(const Common& c, const VerifyOptions& o, std::ostream& out) {
  const ModelSpec spec = c.load();
  const TimeGrid grid = spec.grid();
  const SolveResult solved = solve(spec, grid);

  json report;
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool ok) {
    checks.push_back({{"name", name}, {"pass", ok}});
    all = all && ok;
  };

  const Residuals res = residuals(spec, solved);
  report["residuals"] = to_json(res);
  check("max|rho_zeta| < 1e-8", res.max_rho_zeta < 1e-8);
  check("max|rho_x| < 1e-8", res.max_rho_x < 1e-8);
  check("min Sigma >= -1e-10", res.min_sigma >= -1e-10);

  if (o.mc_paths > 0) {
    const McReport mc = mc_cross_check(solved.policy, spec, grid, o.mc_paths, o.seed);
    report["mc"] = to_json(mc);
    check("|z| E[zeta] < 4", std::abs(mc.zeta.z) < 4.0);
    check("|z| E[zeta X] < 4", std::abs(mc.zeta_x.z) < 4.0);
    check("|z| E[zeta X^2] < 4", std::abs(mc.zeta_x2.z) < 4.0);
  }

  std::vector<SpikeKind> kinds;
  if (o.spike.empty() || o.spike == "u") kinds.push_back(SpikeKind::U);
  if (o.spike.empty() || o.spike == "h") kinds.push_back(SpikeKind::H);
  json spikes = json::array();
  for (SpikeKind kind : kinds) {
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.d), o.mag);
    const SpikeReport s = spike_ladder(kind, p, spec, solved);
    spikes.push_back(to_json(s));
    const double q = s.quotients.back();
    if (kind == SpikeKind::U) {
      check("u-spike within 1% of v'Sigma v/2", std::abs(q - s.predicted) <= 0.01 * std::abs(s.predicted));
    } else {
      check("h-spike quotient <= 1e-6", q <= 1e-6);
    }
  }
  report["spikes"] = spikes;
  report["checks"] = checks;
  report["pass"] = all;
  out << report.dump(2) << '\n';
  return all ? kOk : kVerification;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust time-inconsistent LQ equilibrium solver"};
  app.require_subcommand(1);

  Common common;
  std::string out_path;

  auto* solve_cmd = app.add_subcommand("solve", "solve the equilibrium and write the policy CSV");
  add_common(solve_cmd, common);
  solve_cmd->add_option("--out", out_path, "policy CSV")->required();

  std::string vary, values, values_file;
  auto* sweep_cmd = app.add_subcommand("sweep", "frontier sweep over mu1 or xi");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--vary", vary)->required()->check(CLI::IsMember({"mu1", "xi"}));
  sweep_cmd->add_option("--values", values, "a:b:step or a single value");
  sweep_cmd->add_option("--values-file", values_file, "file of values");
  sweep_cmd->add_option("--out", out_path, "frontier CSV")->required();

  std::string form;
  double a0 = 0.0, a1 = 0.0;
  auto* rel_cmd = app.add_subcommand("relation", "sweep mu1 with xi tied to it");
  add_common(rel_cmd, common);
  rel_cmd->add_option("--form", form)->required()->check(CLI::IsMember({"linear", "quadratic"}));
  auto* a0_opt = rel_cmd->add_option("--a0", a0);
  rel_cmd->add_option("--a1", a1)->required();
  rel_cmd->add_option("--values", values);
  rel_cmd->add_option("--values-file", values_file);
  rel_cmd->add_option("--out", out_path)->required();

  std::string kind;
  auto* base_cmd = app.add_subcommand("baseline", "non-robust equilibrium without ambiguity");
  add_common(base_cmd, common);
  base_cmd->add_option("--kind", kind)->required()->check(CLI::IsMember({"open", "closed"}));
  base_cmd->add_option("--out", out_path)->required();

  std::string constants;
  auto* cert_cmd = app.add_subcommand("certify", "evaluate the well-posedness certificate");
  add_common(cert_cmd, common);
  cert_cmd->add_option("--constants", constants, "truncation constants JSON")->check(CLI::ExistingFile);

  VerifyOptions vo;
  auto* ver_cmd = app.add_subcommand("verify", "residual, Monte Carlo and spike checks");
  add_common(ver_cmd, common);
  ver_cmd->add_option("--mc-paths", vo.mc_paths);
  ver_cmd->add_option("--seed", vo.seed);
  ver_cmd->add_option("--spike", vo.spike)->check(CLI::IsMember({"u", "h"}));
  ver_cmd->add_option("--mag", vo.mag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (*solve_cmd) return cmd_solve(common, out_path, out);
    if (*sweep_cmd) return cmd_sweep(common, vary, values_from(values, values_file), out_path);
    if (*rel_cmd) {
      Relation rel;
      rel.form = form == "linear" ? Relation::Form::Linear : Relation::Form::Quadratic;
      if (rel.form == Relation::Form::Linear && a0_opt->count() == 0)
        throw ValidationError("a0: required for --form linear");
      rel.a0 = a0;
      rel.a1 = a1;
      return cmd_relation(common, rel, values_from(values, values_file), out_path);
    }
    if (*base_cmd) return cmd_baseline(common, kind, out_path);
    if (*cert_cmd) return cmd_certify(common, constants, out);
    if (*ver_cmd) {
      if (vo.mc_paths > 0 && vo.mc_paths < 100) throw ValidationError("mc-paths: at least 100 paths are required");
      return cmd_verify(common, vo, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolver;
  }
  return kValidation;
}

}  // namespace rlq::cli
