#pragma once

#include "drlte/traffic_sim.hpp"

namespace drlte {

struct UtilityConfig {
  double alpha1 = 1.0;  // throughput fairness exponent
  double alpha2 = 1.0;  // delay exponent
  double sigma = 1.0;   // weight of delay against throughput

  void validate() const;
};

/// x^(1-a)/(1-a), or ln x when a == 1. Requires x > 0.
double alpha_utility(double x, double alpha);

/// U(x) - sigma * U(z) with x in bits/s and z in seconds; evaluated on
/// Mbps and milliseconds.
double session_utility(double throughput_bps, double delay_s,
                       const UtilityConfig& cfg);

/// Total utility over all sessions of one epoch.
double reward(const EpochObservation& obs, const UtilityConfig& cfg);

}  // namespace drlte
