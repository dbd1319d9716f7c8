#include "drlte/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "drlte/batch_kernels.hpp"
#include "drlte/errors.hpp"

namespace drlte {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvariantError("agent: gamma must be in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvariantError("agent: tau must be in (0, 1]");
  if (batch_size < 1) throw InvariantError("agent: batch size must be >= 1");
  if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) {
    throw InvariantError("agent: epsilon0 must be in [0, 1]");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0) ||
      !(epsilon_min >= 0.0 && epsilon_min <= 1.0)) {
    throw InvariantError("agent: bad epsilon schedule");
  }
  if (!(noise_amplitude >= 0.0)) throw InvariantError("agent: noise amplitude must be >= 0");
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) {
    throw InvariantError("agent: learning rates must be > 0");
  }
  replay.validate();
}

double epsilon_at(const AgentConfig& cfg, std::uint64_t t) {
  return std::max(cfg.epsilon_min,
                  cfg.epsilon0 * std::pow(cfg.epsilon_decay, static_cast<double>(t)));
}

void project_to_simplices(std::span<double> flat,
                          std::span<const std::size_t> groups) {
  std::size_t off = 0;
  for (std::size_t n : groups) {
    auto g = flat.subspan(off, n);
    double sum = 0.0;
    for (double& w : g) {
      w = std::max(w, 0.0);
      sum += w;
    }
    if (sum > 0.0) {
      for (double& w : g) w /= sum;
    } else {
      for (double& w : g) w = 1.0 / static_cast<double>(n);
    }
    off += n;
  }
}

namespace {

std::vector<std::size_t> groups_of(const MlpParams& actor) {
  if (actor.shape.output == OutputMode::kGroupedSoftmax) return actor.shape.groups;
  return {actor.shape.output_dim()};
}

}  // namespace

Agent::Agent(std::size_t state_dim, std::vector<std::size_t> action_groups,
             AgentConfig cfg)
    : Agent(init_params(standard_shape(state_dim,
                                       std::accumulate(action_groups.begin(),
                                                       action_groups.end(),
                                                       std::size_t{0}),
                                       OutputMode::kGroupedSoftmax, action_groups),
                        derive_seed(cfg.seed, 1)),
            init_params(standard_shape(state_dim + std::accumulate(action_groups.begin(),
                                                                   action_groups.end(),
                                                                   std::size_t{0}),
                                       1),
                        derive_seed(cfg.seed, 2)),
            cfg) {}

Agent::Agent(MlpParams actor, MlpParams critic, AgentConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      state_dim_(actor.shape.input_dim()),
      groups_(groups_of(actor)),
      actor_(std::move(actor)),
      critic_(std::move(critic)),
      target_actor_(actor_),
      target_critic_(critic_),
      actor_opt_(AdamState::for_params(actor_, {.lr = cfg.lr_actor})),
      critic_opt_(AdamState::for_params(critic_, {.lr = cfg.lr_critic})),
      replay_(cfg.replay),
      explore_rng_(derive_seed(cfg.seed, 3)),
      replay_rng_(derive_seed(cfg.seed, 4)) {
  if (critic_.shape.input_dim() != state_dim_ + actor_.shape.output_dim() ||
      critic_.shape.output_dim() != 1) {
    throw InvariantError("agent: critic must map state ++ action to a scalar");
  }
}

void Agent::set_base_action(const SplitAction& base) {
  auto flat = base.flatten();
  if (flat.size() != action_dim()) {
    throw InvariantError("agent: base action has wrong dimension");
  }
  base_ = std::move(flat);
}

void Agent::check_state(std::span<const double> state) const {
  if (state.size() != state_dim_) {
    throw InvariantError("agent: state has " + std::to_string(state.size()) +
                         " entries, expected " + std::to_string(state_dim_));
  }
}

SplitAction Agent::act_greedy(std::span<const double> state) const {
  check_state(state);
  return SplitAction::unflatten(forward(actor_, state), groups_);
}

SplitAction Agent::act_explore(std::span<const double> state) {
  return act_explore_with(state, epsilon());
}

SplitAction Agent::act_explore_with(std::span<const double> state,
                                    double epsilon) {
  check_state(state);
  last_from_base_ = false;
  std::vector<double> a;
  if (cfg_.te_aware) {
    if (!base_) throw InvariantError("agent: TE-aware exploration needs a base action");
    if (uniform01(explore_rng_) < epsilon) {
      a = *base_;
      last_from_base_ = true;
    }
  }
  if (!last_from_base_) a = forward(actor_, state);
  const double scale = epsilon * cfg_.noise_amplitude;
  if (scale > 0.0) {
    for (double& w : a) w += scale * uniform(explore_rng_, -1.0, 1.0);
    project_to_simplices(a, groups_);
  }
  return SplitAction::unflatten(a, groups_);
}

TrainDiagnostics Agent::train_step(TransitionSample t) {
  check_state(t.state);
  check_state(t.next_state);
  if (t.action.size() != action_dim()) {
    throw InvariantError("agent: transition action has wrong dimension");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(t.state) || !finite(t.next_state) || !finite(t.action) ||
      !std::isfinite(t.reward)) {
    throw DivergenceError("agent: non-finite transition at epoch " +
                          std::to_string(epoch_));
  }

  replay_.insert(std::move(t));
  TrainDiagnostics diag;
  if (replay_.size() >= cfg_.batch_size) {
    const double beta1 = anneal_beta1(cfg_.replay, epoch_);
    const auto batch = replay_.sample_batch(cfg_.batch_size, beta1, replay_rng_);
    std::vector<BatchItem> items;
    items.reserve(batch.size());
    for (const auto& s : batch) items.push_back({s.sample, s.is_weight});

    const NetworkSet nets{actor_, critic_, target_actor_, target_critic_};
    BatchResult r = cfg_.parallel_batch
                        ? accumulate_batch_parallel(nets, items, cfg_.gamma)
                        : accumulate_batch_serial(nets, items, cfg_.gamma);

    double priority_sum = 0.0;
    double td_sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double p = compute_priority(r.td_errors[i], r.action_grads[i], cfg_.replay);
      replay_.update_priority(batch[i].index, p);
      priority_sum += p;
      td_sum += std::abs(r.td_errors[i]);
    }

    adam_step(critic_, r.critic_grad, critic_opt_);
    adam_step(actor_, r.actor_grad, actor_opt_);
    soft_update(target_critic_, critic_, cfg_.tau);
    soft_update(target_actor_, actor_, cfg_.tau);
    if (!critic_.all_finite() || !actor_.all_finite()) {
      throw DivergenceError("agent: non-finite weights at epoch " +
                            std::to_string(epoch_));
    }

    const double n = static_cast<double>(batch.size());
    diag.updated = true;
    diag.mean_abs_td = td_sum / n;
    diag.mean_priority = priority_sum / n;
    diag.critic_loss = r.critic_loss;
    diag.actor_objective = r.actor_objective;
  }
  ++epoch_;
  return diag;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kAgentMagic[8] = {'D', 'R', 'L', 'T', 'E', 'A', 'G', 'T'};
constexpr std::uint32_t kAgentVersion = 1;

}  // namespace

void Agent::save(std::ostream& os) const {
  os.write(kAgentMagic, 8);
  os.write(reinterpret_cast<const char*>(&kAgentVersion), sizeof(kAgentVersion));
  os.write(reinterpret_cast<const char*>(&epoch_), sizeof(epoch_));
  write_params(os, actor_);
  write_params(os, critic_);
  write_params(os, target_actor_);
  write_params(os, target_critic_);
  write_adam(os, actor_opt_);
  write_adam(os, critic_opt_);
}

void Agent::load(std::istream& is) {
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t epoch = 0;
  if (!is.read(magic, 8) || std::memcmp(magic, kAgentMagic, 8) != 0) {
    throw ParseError("agent checkpoint: bad magic");
  }
  if (!is.read(reinterpret_cast<char*>(&version), sizeof(version)) ||
      version != kAgentVersion) {
    throw ParseError("agent checkpoint: unsupported version");
  }
  if (!is.read(reinterpret_cast<char*>(&epoch), sizeof(epoch))) {
    throw ParseError("agent checkpoint: truncated stream");
  }
  MlpParams actor = read_params(is);
  MlpParams critic = read_params(is);
  MlpParams target_actor = read_params(is);
  MlpParams target_critic = read_params(is);
  AdamState actor_opt = read_adam(is);
  AdamState critic_opt = read_adam(is);
  if (!(actor.shape == actor_.shape) || !(critic.shape == critic_.shape) ||
      !target_actor.same_shape(actor) || !target_critic.same_shape(critic)) {
    throw ParseError("agent checkpoint: network shapes do not match this agent");
  }
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  target_actor_ = std::move(target_actor);
  target_critic_ = std::move(target_critic);
  actor_opt_ = std::move(actor_opt);
  critic_opt_ = std::move(critic_opt);
  epoch_ = epoch;
}

}  // namespace drlte
