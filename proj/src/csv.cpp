#include "rlq/csv.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace rlq::csv {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void indexed_header(std::ostream& os, const char* name, std::size_t d) {
  for (std::size_t j = 1; j <= d; ++j) os << ',' << name << j;
}

}  // namespace

void write_policy(std::ostream& os, const SolveResult& r) {
  const Policy& p = r.policy;
  const auto d = p.alpha.empty() ? std::size_t{0} : static_cast<std::size_t>(p.alpha.front().size());
  os << 't';
  indexed_header(os, "alpha_", d);
  indexed_header(os, "h_", d);
  os << ",L,H,F,M,N,Gamma,Delta,E,P_tt,Sigma_min\n";
  for (std::size_t k = 0; k < p.t.size(); ++k) {
    const CoeffValues& y = r.coeffs.values[k];
    os << num(p.t[k]);
    for (double a : p.alpha[k]) os << ',' << num(a);
    for (double h : p.h[k]) os << ',' << num(h);
    for (double v : {y.L, y.H, y.F, y.M, y.N, y.Gamma, y.delta(), y.e(), p.p_tt[k], p.sigma_min[k]}) os << ',' << num(v);
    os << '\n';
  }
}

void write_baseline(std::ostream& os, const BaselinePath& path) {
  const auto d = path.alpha.empty() ? std::size_t{0} : static_cast<std::size_t>(path.alpha.front().size());
  os << 't';
  indexed_header(os, "alpha_", d);
  os << '\n';
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    os << num(path.t[k]);
    for (double a : path.alpha[k]) os << ',' << num(a);
    os << '\n';
  }
}

void write_frontier(std::ostream& os, const std::vector<FrontierPoint>& rows, std::size_t d) {
  os << "swept,mu1,xi,mean,std";
  indexed_header(os, "alpha0_", d);
  os << ",status\n";
  for (const auto& r : rows) {
    os << num(r.swept) << ',' << num(r.mu1) << ',' << num(r.xi) << ',' << num(r.mean) << ',' << num(r.std_dev);
    for (double a : r.alpha0) os << ',' << num(a);
    os << ',' << to_string(r.status) << '\n';
  }
}

}  // namespace rlq::csv
