#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drlte/rng.hpp"

namespace drlte {

/// Complete binary tree over a power-of-two number of leaves; every internal
/// node holds the sum of its two children, so the root is the total mass.
///
/// Stored flat: node 1 is the root, node i has children 2i and 2i+1, leaves
/// occupy [leaf_count, 2*leaf_count).
class SumTree {
 public:
  explicit SumTree(std::size_t min_leaves);

  std::size_t leaf_count() const { return leaves_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[leaves_ + i]; }

  /// Writes a leaf and repairs its ancestors. O(log leaves).
  void set(std::size_t i, double value);

  /// Leaf whose cumulative range contains `mass`, for mass in [0, total).
  /// Never returns a zero-mass leaf while total() > 0. O(log leaves).
  std::size_t find(double mass) const;

  /// Largest relative mismatch between an internal node and its children.
  double audit() const;

  /// Node visits performed by set() and find(), for complexity checks.
  std::uint64_t visits() const { return visits_; }

 private:
  std::size_t leaves_;
  std::vector<double> nodes_;
  mutable std::uint64_t visits_ = 0;
};

struct TransitionSample {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
};

struct ReplayConfig {
  std::size_t capacity = std::size_t{1} << 17;
  double beta0 = 0.6;        // prioritization exponent
  double beta1_start = 0.4;  // importance-sampling exponent at epoch 0
  double xi = 0.01;          // priority offset
  double phi = 0.6;          // TD-error vs. action-gradient mix
  std::uint64_t anneal_epochs = 10000;

  void validate() const;
};

struct SampledTransition {
  std::size_t index;
  const TransitionSample* sample;
  double is_weight;
};

/// phi * (|td| + xi) + (1 - phi) * mean(|action_grad|)
double compute_priority(double td_error, std::span<const double> action_grad,
                        const ReplayConfig& cfg);

/// beta1 ramped linearly from beta1_start to 1 over anneal_epochs.
double anneal_beta1(const ReplayConfig& cfg, std::uint64_t epoch);

/// Ring buffer of transitions with proportional prioritized sampling. Tree
/// leaves hold the sampling mass p_i^beta0; raw priorities are kept beside
/// them for the max-priority insertion rule.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(ReplayConfig cfg);

  /// Stores at the cursor with the current maximum priority (1 when empty).
  void insert(TransitionSample t);

  /// Stratified draw: [0, total) split into n equal ranges, one leaf per
  /// range. Weights are (size * P(i))^-beta1 scaled so the batch max is 1.
  std::vector<SampledTransition> sample_batch(std::size_t n, double beta1,
                                              Engine& eng) const;

  void update_priority(std::size_t index, double priority);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return cfg_.capacity; }
  double priority(std::size_t index) const;
  double max_priority() const;
  /// P(i) = p_i^beta0 / sum_j p_j^beta0
  double probability(std::size_t index) const;
  const TransitionSample& at(std::size_t index) const;
  const SumTree& tree() const { return tree_; }
  const ReplayConfig& config() const { return cfg_; }

 private:
  void set_priority(std::size_t index, double priority);

  ReplayConfig cfg_;
  SumTree tree_;
  std::vector<double> max_tree_;  // same layout as the sum tree, holds maxima
  std::vector<double> priorities_;
  std::vector<TransitionSample> data_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
};

}  // namespace drlte
