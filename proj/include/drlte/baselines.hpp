#pragma once

#include <cstddef>
#include <vector>

#include "drlte/topology.hpp"
#include "drlte/traffic_sim.hpp"

namespace drlte {

/// All traffic on the first (fewest hops) candidate path.
SplitAction sp_action(const std::vector<SessionSpec>& sessions);

/// Traffic spread evenly over all candidate paths.
SplitAction lb_action(const std::vector<SessionSpec>& sessions);

struct NumOptions {
  double alpha = 1.0;
  double feasibility_tol = 1e-6;   // relative to capacity / demand
  double stationarity_tol = 1e-6;  // projected gradient, Mbps units
  std::size_t max_iterations = 100000;
};

struct NumDiagnostics {
  double objective = 0.0;                // sum of log(x_k / 1 Mbps)
  double max_capacity_violation = 0.0;   // max (load - C) / C, >= 0
  double max_demand_violation = 0.0;     // max (x - B) / B, >= 0
  double flow_consistency = 0.0;         // max |sum_j f - x| / x
  double stationarity = 0.0;             // projected Lagrangian gradient
  double complementary_slackness = 0.0;  // max lambda_e * slack_e
  std::size_t iterations = 0;
  std::size_t outer_iterations = 0;
  bool converged = false;
};

struct NumSolution {
  std::vector<double> throughput_bps;           // x_k
  std::vector<std::vector<double>> flows_bps;   // f_{k,j}
  std::vector<double> link_duals;               // per link, 1/Mbps
  std::vector<bool> degenerate;                 // session got no flow
  NumDiagnostics diagnostics;
};

/// Proportionally fair rate allocation over the candidate paths:
///   max sum_k log x_k  s.t. link loads <= C_e, x_k <= B_k, x_k = sum_j f_kj.
/// Solved with an augmented Lagrangian on the capacity constraints whose
/// inner problems are handled by spectral projected gradient ascent. Starts
/// from the even split scaled down to feasibility.
NumSolution num_solve(const NetworkGraph& g,
                      const std::vector<SessionSpec>& sessions,
                      const NumOptions& opts = {});

/// w_kj = f_kj / sum_j f_kj; sessions without flow fall back to uniform.
SplitAction num_action(const NumSolution& sol);

/// sum_k log(x_k in Mbps), the objective the solver maximizes.
double num_objective(const std::vector<double>& throughput_bps);

/// The even split scaled by one common factor until every link fits.
std::vector<std::vector<double>> lb_feasible_flows(
    const NetworkGraph& g, const std::vector<SessionSpec>& sessions);

}  // namespace drlte
