#include "drlte/replay.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "drlte/errors.hpp"

namespace drlte {

SumTree::SumTree(std::size_t min_leaves)
    : leaves_(std::bit_ceil(std::max<std::size_t>(min_leaves, 1))),
      nodes_(2 * leaves_, 0.0) {}

void SumTree::set(std::size_t i, double value) {
  if (i >= leaves_) throw InvariantError("sum tree: leaf index out of range");
  std::size_t n = leaves_ + i;
  nodes_[n] = value;
  ++visits_;
  for (n /= 2; n >= 1; n /= 2) {
    nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
    ++visits_;
  }
}

std::size_t SumTree::find(double mass) const {
  std::size_t n = 1;
  while (n < leaves_) {
    ++visits_;
    const double left = nodes_[2 * n];
    const double right = nodes_[2 * n + 1];
    if ((mass < left && left > 0.0) || right <= 0.0) {
      n = 2 * n;
    } else {
      mass -= left;
      n = 2 * n + 1;
    }
  }
  return n - leaves_;
}

double SumTree::audit() const {
  double worst = 0.0;
  for (std::size_t n = 1; n < leaves_; ++n) {
    const double kids = nodes_[2 * n] + nodes_[2 * n + 1];
    const double scale = std::max({std::abs(kids), std::abs(nodes_[n]), 1e-300});
    worst = std::max(worst, std::abs(nodes_[n] - kids) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------

void ReplayConfig::validate() const {
  if (capacity < 1) throw InvariantError("replay: capacity must be >= 1");
  if (!(beta0 >= 0.0)) throw InvariantError("replay: beta0 must be >= 0");
  if (!(beta1_start > 0.0 && beta1_start <= 1.0)) {
    throw InvariantError("replay: beta1_start must be in (0, 1]");
  }
  if (!(xi > 0.0)) throw InvariantError("replay: xi must be > 0");
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvariantError("replay: phi must be in [0, 1]");
}

double compute_priority(double td_error, std::span<const double> action_grad,
                        const ReplayConfig& cfg) {
  if (!std::isfinite(td_error)) throw DivergenceError("priority: non-finite TD error");
  double mean_abs = 0.0;
  for (double g : action_grad) {
    if (!std::isfinite(g)) throw DivergenceError("priority: non-finite action gradient");
    mean_abs += std::abs(g);
  }
  if (!action_grad.empty()) mean_abs /= static_cast<double>(action_grad.size());
  return cfg.phi * (std::abs(td_error) + cfg.xi) + (1.0 - cfg.phi) * mean_abs;
}

double anneal_beta1(const ReplayConfig& cfg, std::uint64_t epoch) {
  if (cfg.anneal_epochs == 0 || epoch >= cfg.anneal_epochs) return 1.0;
  const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.anneal_epochs);
  return std::min(1.0, cfg.beta1_start + (1.0 - cfg.beta1_start) * frac);
}

PrioritizedBuffer::PrioritizedBuffer(ReplayConfig cfg)
    : cfg_(cfg), tree_((cfg.validate(), cfg.capacity)) {
  max_tree_.assign(2 * tree_.leaf_count(), 0.0);
  priorities_.assign(cfg_.capacity, 0.0);
}

void PrioritizedBuffer::set_priority(std::size_t index, double priority) {
  priorities_[index] = priority;
  tree_.set(index, std::pow(priority, cfg_.beta0));
  std::size_t n = tree_.leaf_count() + index;
  max_tree_[n] = priority;
  for (n /= 2; n >= 1; n /= 2) {
    max_tree_[n] = std::max(max_tree_[2 * n], max_tree_[2 * n + 1]);
  }
}

void PrioritizedBuffer::insert(TransitionSample t) {
  const double p = size_ == 0 ? 1.0 : max_priority();
  if (cursor_ < data_.size()) {
    data_[cursor_] = std::move(t);
  } else {
    data_.push_back(std::move(t));
  }
  set_priority(cursor_, p);
  cursor_ = (cursor_ + 1) % cfg_.capacity;
  size_ = std::min(size_ + 1, cfg_.capacity);
}

std::vector<SampledTransition> PrioritizedBuffer::sample_batch(
    std::size_t n, double beta1, Engine& eng) const {
  if (n == 0 || size_ < n) {
    throw InvariantError("replay: " + std::to_string(size_) +
                         " samples stored, batch of " + std::to_string(n) +
                         " requested");
  }
  const double total = tree_.total();
  const double segment = total / static_cast<double>(n);
  std::vector<SampledTransition> batch;
  batch.reserve(n);
  double max_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mass = (static_cast<double>(i) + uniform01(eng)) * segment;
    mass = std::min(mass, std::nextafter(total, 0.0));
    const std::size_t idx = tree_.find(mass);
    const double prob = tree_.leaf(idx) / total;
    const double w = std::pow(static_cast<double>(size_) * prob, -beta1);
    max_w = std::max(max_w, w);
    batch.push_back({idx, &data_[idx], w});
  }
  for (auto& s : batch) s.is_weight /= max_w;
  return batch;
}

void PrioritizedBuffer::update_priority(std::size_t index, double priority) {
  if (index >= size_) throw InvariantError("replay: index out of range");
  if (!(priority > 0.0) || !std::isfinite(priority)) {
    throw InvariantError("replay: priority must be positive and finite");
  }
  set_priority(index, priority);
}

double PrioritizedBuffer::priority(std::size_t index) const {
  if (index >= size_) throw InvariantError("replay: index out of range");
  return priorities_[index];
}

double PrioritizedBuffer::max_priority() const { return max_tree_[1]; }

double PrioritizedBuffer::probability(std::size_t index) const {
  if (index >= size_) throw InvariantError("replay: index out of range");
  return tree_.leaf(index) / tree_.total();
}

const TransitionSample& PrioritizedBuffer::at(std::size_t index) const {
  if (index >= size_) throw InvariantError("replay: index out of range");
  return data_[index];
}

}  // namespace drlte
