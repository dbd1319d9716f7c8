#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drlte/nn.hpp"
#include "drlte/replay.hpp"

namespace drlte {

/// Read-only view of the four networks used by one training step.
struct NetworkSet {
  const MlpParams& actor;
  const MlpParams& critic;
  const MlpParams& target_actor;
  const MlpParams& target_critic;
};

struct BatchItem {
  const TransitionSample* sample;
  double is_weight;
};

/// Accumulated mini-batch quantities. Gradients are descent directions:
/// critic_grad = -sum w*delta*dQ/dtheta, actor_grad = -sum w*dQ/da*da/dtheta.
struct BatchResult {
  MlpParams critic_grad;
  MlpParams actor_grad;
  std::vector<double> td_errors;
  std::vector<double> targets;
  std::vector<std::vector<double>> action_grads;  // dQ/da at a = pi(s)
  double critic_loss = 0.0;                       // 0.5 * sum w * delta^2
  double actor_objective = 0.0;                   // sum w * Q(s, pi(s))
};

/// Reference implementation: one sample after another.
BatchResult accumulate_batch_serial(const NetworkSet& nets,
                                    std::span<const BatchItem> items,
                                    double gamma);

/// Per-sample work spread over OpenMP threads, then summed in sample order,
/// so the result is bit-identical to the serial kernel.
BatchResult accumulate_batch_parallel(const NetworkSet& nets,
                                      std::span<const BatchItem> items,
                                      double gamma);

}  // namespace drlte
