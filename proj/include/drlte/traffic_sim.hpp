#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "drlte/rng.hpp"
#include "drlte/topology.hpp"

namespace drlte {

/// Per-session split ratios over candidate paths.
struct SplitAction {
  std::vector<std::vector<double>> ratios;

  /// Throws InvariantError on dimension mismatch, negative entries or a
  /// per-session sum further than `tol` from 1.
  void validate(const std::vector<SessionSpec>& sessions,
                double tol = 1e-9) const;

  std::vector<double> flatten() const;
  static SplitAction unflatten(std::span<const double> flat,
                               std::span<const std::size_t> group_sizes);
};

/// Path count per session; the layout of a flattened SplitAction.
std::vector<std::size_t> action_layout(const std::vector<SessionSpec>& sessions);

struct SimConfig {
  double epoch_length_s = 0.5;
  double packet_size_bits = 8000.0;
  std::uint64_t seed = 1;
  double delay_floor_s = 1e-6;
  double throughput_floor_bps = 1e3;

  void validate() const;
};

struct EpochObservation {
  std::uint64_t epoch = 0;
  std::vector<double> throughput_bps;  // x_k, floored
  std::vector<double> delay_s;         // z_k, floored
  std::vector<std::uint64_t> drops;
  std::vector<std::uint64_t> generated;
  std::vector<std::uint64_t> delivered;

  std::uint64_t total_drops() const;
};

/// Packet totals since construction. generated == delivered + dropped +
/// in_flight at every epoch boundary.
struct PacketLedger {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight = 0;
};

/// One observed link traversal, recorded only when tracing is enabled.
struct LinkTraceEntry {
  std::size_t link;
  std::uint64_t packet_uid;
  double enqueue_time;
  double exit_time;
};

/// Deterministic packet-level simulator: Poisson arrivals per session,
/// per-packet random path choice, drop-tail FIFO links with deterministic
/// service. Exclusively owned and single-threaded.
class Simulator {
 public:
  Simulator(const NetworkGraph& g, std::vector<SessionSpec> sessions,
            SimConfig cfg);

  /// Advances time by one epoch under `action` and reports what was
  /// delivered during the epoch.
  EpochObservation run_epoch(const SplitAction& action);

  double now() const { return now_; }
  std::uint64_t epochs_run() const { return epoch_; }
  std::size_t pending_events() const { return events_.size(); }
  PacketLedger ledger() const;
  const std::vector<SessionSpec>& sessions() const { return sessions_; }
  const NetworkGraph& graph() const { return graph_; }
  const SimConfig& config() const { return cfg_; }

  /// Time of each session's next pending arrival (infinity when idle).
  std::vector<double> next_arrival_times() const;

  /// Cumulative packets sent per (session, path).
  const std::vector<std::vector<std::uint64_t>>& path_usage() const {
    return path_usage_;
  }

  void enable_link_trace(bool on) { trace_on_ = on; }
  const std::vector<LinkTraceEntry>& link_trace() const { return trace_; }

 private:
  enum class EventKind : std::uint8_t { kArrival, kHopDone };

  struct Event {
    double time;
    std::uint64_t seq;
    std::uint32_t id;  // session for arrivals, packet slot for hops
    EventKind kind;
    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  struct Packet {
    std::uint64_t uid;
    double created;
    double enqueued;
    std::uint32_t session;
    std::uint32_t path;
    std::uint32_t hop;
  };

  // Departure times of packets currently held by a link, oldest first.
  struct LinkQueue {
    std::vector<double> ring;
    std::size_t head = 0;
    std::size_t count = 0;
    double last_departure = 0.0;
  };

  void push_event(double t, EventKind kind, std::uint32_t id);
  void on_arrival(const Event& e);
  void on_hop_done(const Event& e);
  void enter_link(std::uint32_t slot, double t);
  std::uint32_t alloc_packet();

  NetworkGraph graph_;
  std::vector<SessionSpec> sessions_;
  SimConfig cfg_;

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_uid_ = 0;
  double now_ = 0.0;
  std::uint64_t epoch_ = 0;

  std::vector<Engine> arrival_rng_;
  std::vector<Engine> path_rng_;
  std::vector<double> rate_pps_;
  std::vector<double> next_arrival_;
  std::vector<std::vector<double>> cumulative_;  // current action, per session

  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<LinkQueue> queues_;
  std::vector<double> service_s_;

  // Epoch accumulators.
  std::vector<double> bits_;
  std::vector<double> delay_sum_;
  std::vector<std::uint64_t> delivered_epoch_;
  std::vector<std::uint64_t> drops_epoch_;
  std::vector<std::uint64_t> generated_epoch_;

  PacketLedger totals_;
  std::vector<std::vector<std::uint64_t>> path_usage_;
  bool trace_on_ = false;
  std::vector<LinkTraceEntry> trace_;
};

/// Scales for mapping an observation onto the agent's state vector.
struct StateNormalization {
  double throughput_ref_bps = 100e6;
  double delay_ref_s = 0.05;
};

/// [x_1/x_ref, z_1/z_ref, x_2/x_ref, ...] clipped to [0, 1].
std::vector<double> observation_to_state(const EpochObservation& obs,
                                         const StateNormalization& norm);

}  // namespace drlte
