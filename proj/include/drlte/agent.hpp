#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "drlte/nn.hpp"
#include "drlte/replay.hpp"
#include "drlte/rng.hpp"
#include "drlte/traffic_sim.hpp"

namespace drlte {

enum class BasePolicy { kShortestPath, kLoadBalance, kNum };

struct AgentConfig {
  double gamma = 0.99;
  double tau = 0.01;
  double lr_actor = 0.001;
  double lr_critic = 0.01;
  std::size_t batch_size = 64;
  double epsilon0 = 1.0;
  double epsilon_decay = 0.9995;
  double epsilon_min = 0.05;
  double noise_amplitude = 0.5;
  /// Mix the base TE action into exploration. Off for the plain DDPG arm.
  bool te_aware = true;
  BasePolicy base_policy = BasePolicy::kNum;
  ReplayConfig replay;
  /// Use the OpenMP batch kernel; the serial one gives identical results.
  bool parallel_batch = true;
  std::uint64_t seed = 1;

  void validate() const;
};

/// max(epsilon_min, epsilon0 * epsilon_decay^t)
double epsilon_at(const AgentConfig& cfg, std::uint64_t t);

struct TrainDiagnostics {
  bool updated = false;
  double mean_abs_td = 0.0;
  double mean_priority = 0.0;
  double critic_loss = 0.0;
  double actor_objective = 0.0;
};

/// Clips negatives and renormalizes each block; an all-zero block becomes
/// uniform.
void project_to_simplices(std::span<double> flat,
                          std::span<const std::size_t> groups);

/// Actor-critic agent with target networks, TE-aware exploration and
/// actor-critic prioritized replay.
class Agent {
 public:
  /// Standard 64/32 networks; the actor ends in a per-session softmax.
  Agent(std::size_t state_dim, std::vector<std::size_t> action_groups,
        AgentConfig cfg);
  /// Caller-supplied networks. The critic input must be state ++ action.
  Agent(MlpParams actor, MlpParams critic, AgentConfig cfg);

  void set_base_action(const SplitAction& base);
  const std::optional<std::vector<double>>& base_action() const { return base_; }

  /// Exploration action at the current epoch's epsilon.
  SplitAction act_explore(std::span<const double> state);
  SplitAction act_explore_with(std::span<const double> state, double epsilon);
  SplitAction act_greedy(std::span<const double> state) const;

  /// Stores the transition and, once the buffer holds a batch, performs one
  /// prioritized actor-critic update followed by the target soft update.
  TrainDiagnostics train_step(TransitionSample t);

  std::uint64_t epoch() const { return epoch_; }
  double epsilon() const { return epsilon_at(cfg_, epoch_); }
  bool last_action_from_base() const { return last_from_base_; }

  const AgentConfig& config() const { return cfg_; }
  const MlpParams& actor() const { return actor_; }
  const MlpParams& critic() const { return critic_; }
  const MlpParams& target_actor() const { return target_actor_; }
  const MlpParams& target_critic() const { return target_critic_; }
  const AdamState& actor_optimizer() const { return actor_opt_; }
  const AdamState& critic_optimizer() const { return critic_opt_; }
  const PrioritizedBuffer& replay() const { return replay_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return actor_.shape.output_dim(); }
  const std::vector<std::size_t>& action_groups() const { return groups_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  void check_state(std::span<const double> state) const;

  AgentConfig cfg_;
  std::size_t state_dim_;
  std::vector<std::size_t> groups_;
  MlpParams actor_, critic_, target_actor_, target_critic_;
  AdamState actor_opt_, critic_opt_;
  PrioritizedBuffer replay_;
  std::optional<std::vector<double>> base_;
  Engine explore_rng_;
  Engine replay_rng_;
  std::uint64_t epoch_ = 0;
  bool last_from_base_ = false;
};

}  // namespace drlte
