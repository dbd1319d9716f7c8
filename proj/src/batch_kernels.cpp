#include "drlte/batch_kernels.hpp"

#include <omp.h>

#include <cmath>

#include "drlte/errors.hpp"

namespace drlte {

namespace {

struct SampleOut {
  double td_error = 0.0;
  double target = 0.0;
  double q = 0.0;
  double q_pi = 0.0;
  std::vector<double> action_grad;
};

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> v;
  v.reserve(a.size() + b.size());
  v.insert(v.end(), a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

// Adds one sample's weighted gradients into zeroed buffers.
SampleOut sample_contribution(const NetworkSet& nets, const BatchItem& item,
                              double gamma, MlpParams& critic_g,
                              MlpParams& actor_g) {
  const TransitionSample& t = *item.sample;
  SampleOut out;

  const auto next_action = forward(nets.target_actor, t.next_state);
  const auto next_q = forward(nets.target_critic, concat(t.next_state, next_action));
  out.target = t.reward + gamma * next_q[0];

  ForwardCache critic_cache;
  out.q = forward(nets.critic, concat(t.state, t.action), &critic_cache)[0];
  out.td_error = out.target - out.q;
  const double one = 1.0;
  backward(nets.critic, critic_cache, std::span(&one, 1),
           -item.is_weight * out.td_error, &critic_g, nullptr);

  ForwardCache actor_cache;
  const auto policy_action = forward(nets.actor, t.state, &actor_cache);
  ForwardCache policy_cache;
  out.q_pi = forward(nets.critic, concat(t.state, policy_action), &policy_cache)[0];
  std::vector<double> input_grad;
  backward(nets.critic, policy_cache, std::span(&one, 1), 1.0, nullptr, &input_grad);
  out.action_grad.assign(input_grad.begin() + static_cast<std::ptrdiff_t>(t.state.size()),
                         input_grad.end());
  backward(nets.actor, actor_cache, out.action_grad, -item.is_weight, &actor_g,
           nullptr);
  return out;
}

BatchResult empty_result(const NetworkSet& nets, std::size_t n) {
  BatchResult r;
  r.critic_grad = nets.critic.zeros_like();
  r.actor_grad = nets.actor.zeros_like();
  r.td_errors.resize(n);
  r.targets.resize(n);
  r.action_grads.resize(n);
  return r;
}

void fold(BatchResult& r, std::size_t i, const BatchItem& item, SampleOut&& s,
          const MlpParams& critic_g, const MlpParams& actor_g) {
  r.critic_grad.axpy(1.0, critic_g);
  r.actor_grad.axpy(1.0, actor_g);
  r.td_errors[i] = s.td_error;
  r.targets[i] = s.target;
  r.critic_loss += 0.5 * item.is_weight * s.td_error * s.td_error;
  r.actor_objective += item.is_weight * s.q_pi;
  r.action_grads[i] = std::move(s.action_grad);
}

}  // namespace

BatchResult accumulate_batch_serial(const NetworkSet& nets,
                                    std::span<const BatchItem> items,
                                    double gamma) {
  BatchResult r = empty_result(nets, items.size());
  MlpParams critic_g = nets.critic.zeros_like();
  MlpParams actor_g = nets.actor.zeros_like();
  for (std::size_t i = 0; i < items.size(); ++i) {
    critic_g.set_zero();
    actor_g.set_zero();
    SampleOut s = sample_contribution(nets, items[i], gamma, critic_g, actor_g);
    fold(r, i, items[i], std::move(s), critic_g, actor_g);
  }
  return r;
}

BatchResult accumulate_batch_parallel(const NetworkSet& nets,
                                      std::span<const BatchItem> items,
                                      double gamma) {
  const std::size_t n = items.size();
  BatchResult r = empty_result(nets, n);
  std::vector<MlpParams> critic_g(n, nets.critic.zeros_like());
  std::vector<MlpParams> actor_g(n, nets.actor.zeros_like());
  std::vector<SampleOut> outs(n);

  bool failed = false;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      outs[i] = sample_contribution(nets, items[i], gamma, critic_g[i], actor_g[i]);
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw InvariantError("batch kernel: malformed sample in batch");

  for (std::size_t i = 0; i < n; ++i) {
    fold(r, i, items[i], std::move(outs[i]), critic_g[i], actor_g[i]);
  }
  return r;
}

}  // namespace drlte
