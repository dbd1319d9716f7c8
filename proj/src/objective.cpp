#include "drlte/objective.hpp"

#include <cmath>
#include <string>

#include "drlte/errors.hpp"

namespace drlte {

void UtilityConfig::validate() const {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(sigma >= 0.0)) {
    throw InvariantError("utility config: need alpha1 > 0, alpha2 > 0, sigma >= 0");
  }
}

double alpha_utility(double x, double alpha) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw InvariantError("alpha_utility: x must be positive, got " +
                         std::to_string(x));
  }
  if (alpha == 1.0) return std::log(x);
  return std::pow(x, 1.0 - alpha) / (1.0 - alpha);
}

double session_utility(double throughput_bps, double delay_s,
                       const UtilityConfig& cfg) {
  const double x_mbps = throughput_bps * 1e-6;
  const double z_ms = delay_s * 1e3;
  return alpha_utility(x_mbps, cfg.alpha1) -
         cfg.sigma * alpha_utility(z_ms, cfg.alpha2);
}

double reward(const EpochObservation& obs, const UtilityConfig& cfg) {
  if (obs.throughput_bps.size() != obs.delay_s.size()) {
    throw InvariantError("reward: throughput and delay vectors differ in length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < obs.throughput_bps.size(); ++k) {
    total += session_utility(obs.throughput_bps[k], obs.delay_s[k], cfg);
  }
  return total;
}

}  // namespace drlte
