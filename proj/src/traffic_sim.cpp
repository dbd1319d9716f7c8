#include "drlte/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "drlte/errors.hpp"

namespace drlte {

void SplitAction::validate(const std::vector<SessionSpec>& sessions,
                           double tol) const {
  if (ratios.size() != sessions.size()) {
    throw InvariantError("action: " + std::to_string(ratios.size()) +
                         " sessions, expected " +
                         std::to_string(sessions.size()));
  }
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    const auto& r = ratios[k];
    if (r.size() != sessions[k].paths.size()) {
      throw InvariantError("action: session " + std::to_string(k) + " has " +
                           std::to_string(r.size()) + " ratios for " +
                           std::to_string(sessions[k].paths.size()) + " paths");
    }
    double sum = 0.0;
    for (double w : r) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvariantError("action: session " + std::to_string(k) +
                             " has a negative or non-finite ratio");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw InvariantError("action: session " + std::to_string(k) +
                           " ratios sum to " + std::to_string(sum));
    }
  }
}

std::vector<double> SplitAction::flatten() const {
  std::vector<double> flat;
  for (const auto& r : ratios) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

SplitAction SplitAction::unflatten(std::span<const double> flat,
                                   std::span<const std::size_t> group_sizes) {
  std::size_t total = std::accumulate(group_sizes.begin(), group_sizes.end(),
                                      std::size_t{0});
  if (total != flat.size()) {
    throw InvariantError("action: flat length " + std::to_string(flat.size()) +
                         " does not match layout " + std::to_string(total));
  }
  SplitAction a;
  std::size_t off = 0;
  for (std::size_t n : group_sizes) {
    a.ratios.emplace_back(flat.begin() + off, flat.begin() + off + n);
    off += n;
  }
  return a;
}

std::vector<std::size_t> action_layout(
    const std::vector<SessionSpec>& sessions) {
  std::vector<std::size_t> layout;
  for (const auto& s : sessions) layout.push_back(s.paths.size());
  return layout;
}

void SimConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(epoch_length_s) || !positive(packet_size_bits) ||
      !positive(delay_floor_s) || !positive(throughput_floor_bps)) {
    throw InvariantError("sim config: all lengths, sizes and floors must be > 0");
  }
  if (seed == 0) throw InvariantError("sim config: seed must be nonzero");
}

std::uint64_t EpochObservation::total_drops() const {
  return std::accumulate(drops.begin(), drops.end(), std::uint64_t{0});
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const NetworkGraph& g, std::vector<SessionSpec> sessions,
                     SimConfig cfg)
    : graph_(g), sessions_(std::move(sessions)), cfg_(cfg) {
  cfg_.validate();
  const std::size_t K = sessions_.size();
  for (std::size_t k = 0; k < K; ++k) {
    const auto& s = sessions_[k];
    if (s.paths.empty()) {
      throw InvariantError("session " + std::to_string(s.id) + ": no paths");
    }
    for (const auto& p : s.paths) {
      if (!is_valid_path(graph_, p, s.src, s.dst)) {
        throw InvariantError("session " + std::to_string(s.id) +
                             ": invalid path reference");
      }
    }
    if (!(s.demand_mean_bps >= 0.0) || !std::isfinite(s.demand_mean_bps)) {
      throw InvariantError("session " + std::to_string(s.id) +
                           ": demand must be finite and >= 0");
    }
  }

  queues_.resize(graph_.num_links());
  service_s_.resize(graph_.num_links());
  for (std::size_t l = 0; l < graph_.num_links(); ++l) {
    queues_[l].ring.assign(graph_.link(l).buffer_pkts, 0.0);
    service_s_[l] = cfg_.packet_size_bits / graph_.link(l).capacity_bps;
  }

  bits_.assign(K, 0.0);
  delay_sum_.assign(K, 0.0);
  delivered_epoch_.assign(K, 0);
  drops_epoch_.assign(K, 0);
  generated_epoch_.assign(K, 0);
  path_usage_.resize(K);
  cumulative_.resize(K);
  next_arrival_.assign(K, std::numeric_limits<double>::infinity());

  for (std::size_t k = 0; k < K; ++k) {
    arrival_rng_.emplace_back(derive_seed(cfg_.seed, 2 * k + 1));
    path_rng_.emplace_back(derive_seed(cfg_.seed, 2 * k + 2));
    rate_pps_.push_back(sessions_[k].demand_mean_bps / cfg_.packet_size_bits);
    path_usage_[k].assign(sessions_[k].paths.size(), 0);
    if (rate_pps_[k] > 0.0) {
      next_arrival_[k] = exponential(arrival_rng_[k], rate_pps_[k]);
      push_event(next_arrival_[k], EventKind::kArrival,
                 static_cast<std::uint32_t>(k));
    }
  }
}

void Simulator::push_event(double t, EventKind kind, std::uint32_t id) {
  events_.push(Event{t, next_seq_++, id, kind});
}

std::uint32_t Simulator::alloc_packet() {
  if (!free_slots_.empty()) {
    std::uint32_t s = free_slots_.back();
    free_slots_.pop_back();
    return s;
  }
  packets_.emplace_back();
  return static_cast<std::uint32_t>(packets_.size() - 1);
}

void Simulator::enter_link(std::uint32_t slot, double t) {
  Packet& p = packets_[slot];
  const std::size_t li = sessions_[p.session].paths[p.path].links[p.hop];
  LinkQueue& q = queues_[li];
  const std::size_t cap = q.ring.size();
  while (q.count > 0 && q.ring[q.head] <= t) {
    q.head = (q.head + 1) % cap;
    --q.count;
  }
  if (q.count >= cap) {
    ++drops_epoch_[p.session];
    ++totals_.dropped;
    free_slots_.push_back(slot);
    return;
  }
  const double depart = std::max(t, q.last_departure) + service_s_[li];
  q.ring[(q.head + q.count) % cap] = depart;
  ++q.count;
  q.last_departure = depart;
  p.enqueued = t;
  push_event(depart + graph_.link(li).prop_delay_s, EventKind::kHopDone, slot);
}

void Simulator::on_arrival(const Event& e) {
  const std::uint32_t k = e.id;
  const std::uint32_t slot = alloc_packet();
  Packet& p = packets_[slot];
  p.uid = next_uid_++;
  p.created = e.time;
  p.session = k;
  p.hop = 0;
  const auto& cum = cumulative_[k];
  const double u = uniform01(path_rng_[k]);
  std::uint32_t j = 0;
  while (j + 1 < cum.size() && !(u < cum[j])) ++j;
  p.path = j;
  ++path_usage_[k][j];
  ++generated_epoch_[k];
  ++totals_.generated;
  enter_link(slot, e.time);

  next_arrival_[k] = e.time + exponential(arrival_rng_[k], rate_pps_[k]);
  push_event(next_arrival_[k], EventKind::kArrival, k);
}

void Simulator::on_hop_done(const Event& e) {
  const std::uint32_t slot = e.id;
  Packet& p = packets_[slot];
  const auto& path = sessions_[p.session].paths[p.path];
  if (trace_on_) {
    trace_.push_back({path.links[p.hop], p.uid, p.enqueued, e.time});
  }
  ++p.hop;
  if (p.hop == path.links.size()) {
    bits_[p.session] += cfg_.packet_size_bits;
    delay_sum_[p.session] += e.time - p.created;
    ++delivered_epoch_[p.session];
    ++totals_.delivered;
    free_slots_.push_back(slot);
    return;
  }
  enter_link(slot, e.time);
}

EpochObservation Simulator::run_epoch(const SplitAction& action) {
  action.validate(sessions_);
  const std::size_t K = sessions_.size();
  for (std::size_t k = 0; k < K; ++k) {
    auto& cum = cumulative_[k];
    cum.resize(action.ratios[k].size());
    double acc = 0.0;
    for (std::size_t j = 0; j < cum.size(); ++j) {
      acc += action.ratios[k][j];
      cum[j] = acc;
    }
  }
  std::fill(bits_.begin(), bits_.end(), 0.0);
  std::fill(delay_sum_.begin(), delay_sum_.end(), 0.0);
  std::fill(delivered_epoch_.begin(), delivered_epoch_.end(), 0);
  std::fill(drops_epoch_.begin(), drops_epoch_.end(), 0);
  std::fill(generated_epoch_.begin(), generated_epoch_.end(), 0);

  const double end = static_cast<double>(epoch_ + 1) * cfg_.epoch_length_s;
  while (!events_.empty() && events_.top().time < end) {
    const Event e = events_.top();
    events_.pop();
    now_ = e.time;
    if (e.kind == EventKind::kArrival) {
      on_arrival(e);
    } else {
      on_hop_done(e);
    }
  }
  now_ = end;

  EpochObservation obs;
  obs.epoch = epoch_++;
  obs.throughput_bps.resize(K);
  obs.delay_s.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (delivered_epoch_[k] == 0) {
      obs.throughput_bps[k] = cfg_.throughput_floor_bps;
      obs.delay_s[k] = cfg_.delay_floor_s;
    } else {
      obs.throughput_bps[k] =
          std::max(bits_[k] / cfg_.epoch_length_s, cfg_.throughput_floor_bps);
      obs.delay_s[k] = std::max(
          delay_sum_[k] / static_cast<double>(delivered_epoch_[k]),
          cfg_.delay_floor_s);
    }
  }
  obs.drops = drops_epoch_;
  obs.generated = generated_epoch_;
  obs.delivered = delivered_epoch_;
  return obs;
}

PacketLedger Simulator::ledger() const {
  PacketLedger l = totals_;
  // Live packet slots, counted independently of the three counters above.
  l.in_flight = packets_.size() - free_slots_.size();
  return l;
}

std::vector<double> Simulator::next_arrival_times() const {
  return next_arrival_;
}

std::vector<double> observation_to_state(const EpochObservation& obs,
                                         const StateNormalization& norm) {
  const std::size_t K = obs.throughput_bps.size();
  std::vector<double> s(2 * K);
  for (std::size_t k = 0; k < K; ++k) {
    s[2 * k] = std::clamp(obs.throughput_bps[k] / norm.throughput_ref_bps, 0.0, 1.0);
    s[2 * k + 1] = std::clamp(obs.delay_s[k] / norm.delay_ref_s, 0.0, 1.0);
  }
  return s;
}

}  // namespace drlte
