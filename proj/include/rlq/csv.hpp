#pragma once

// CSV emitters. Numbers use 17 significant digits so files round-trip.

#include <ostream>
#include <vector>

#include "rlq/baseline.hpp"
#include "rlq/equilibrium.hpp"
#include "rlq/mv.hpp"

namespace rlq::csv {

/// t,alpha_1..alpha_d,h_1..h_d,L,H,F,M,N,Gamma,Delta,E,P_tt,Sigma_min
void write_policy(std::ostream& os, const SolveResult& result);

/// t,alpha_1..alpha_d
void write_baseline(std::ostream& os, const BaselinePath& path);

/// swept,mu1,xi,mean,std,alpha0_1..alpha0_d,status
void write_frontier(std::ostream& os, const std::vector<FrontierPoint>& rows, std::size_t d);

}  // namespace rlq::csv
