#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace drlte {

/// A directed link. Capacity in bits/s, propagation delay in seconds.
struct Link {
  std::size_t src = 0;
  std::size_t dst = 0;
  double capacity_bps = 0.0;
  double prop_delay_s = 0.0;
  std::size_t buffer_pkts = 0;
};

/// Attributes given to links when a document or generator omits them.
struct LinkDefaults {
  double capacity_bps = 100e6;
  double prop_delay_s = 1e-3;
  std::size_t buffer_pkts = 100;
};

/// Directed graph with per-link capacity, delay and buffer. Immutable after
/// construction; the constructor enforces every structural invariant.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(std::vector<std::string> nodes, std::vector<Link> links);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_links() const { return links_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(std::size_t i) const { return links_.at(i); }
  const std::string& node_name(std::size_t i) const { return nodes_.at(i); }

  /// Index of a named node; throws InvariantError if absent.
  std::size_t node_index(std::string_view name) const;

  /// Link indices leaving `node`, ordered by destination name.
  std::span<const std::size_t> out_links(std::size_t node) const {
    return out_[node];
  }

  /// Index of link src->dst or -1.
  std::ptrdiff_t find_link(std::size_t src, std::size_t dst) const;

  /// Hop distance from every node to `dst` (SIZE_MAX if unreachable).
  std::vector<std::size_t> hops_to(std::size_t dst) const;

  bool reachable(std::size_t src, std::size_t dst) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Link> links_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// An ordered sequence of link indices forming a loop-free walk.
struct Path {
  std::vector<std::size_t> links;

  std::size_t hops() const { return links.size(); }
  std::vector<std::size_t> node_sequence(const NetworkGraph& g) const;
  bool operator==(const Path&) const = default;
};

/// Checks link adjacency, endpoints and the no-repeated-node rule.
bool is_valid_path(const NetworkGraph& g, const Path& p, std::size_t src,
                   std::size_t dst);

struct SessionSpec {
  int id = 0;
  std::size_t src = 0;
  std::size_t dst = 0;
  double demand_mean_bps = 0.0;
  std::vector<Path> paths;
};

struct DemandWindow {
  double lo_bps = 0.0;
  double hi_bps = 0.0;
};

NetworkGraph parse_topology(const nlohmann::json& doc,
                            const LinkDefaults& defaults = {});
NetworkGraph load_topology(const std::filesystem::path& file,
                           const LinkDefaults& defaults = {});
nlohmann::json topology_to_json(const NetworkGraph& g);

/// Random spanning tree plus uniformly chosen extra links. Deterministic per
/// seed; every link gets `defaults`.
NetworkGraph generate_random_topology(std::size_t n_nodes, std::size_t n_links,
                                      std::uint64_t seed,
                                      const LinkDefaults& defaults = {});

/// Up to k loop-free src->dst paths ordered by (hop count, node-name
/// sequence). Throws UnreachableError when dst cannot be reached.
std::vector<Path> k_shortest_paths(const NetworkGraph& g, std::size_t src,
                                   std::size_t dst, std::size_t k);

/// K sessions over distinct reachable (src, dst) pairs with demand means
/// uniform in the window. Pair choice and the per-session uniform draw depend
/// only on the seed, so sliding the window shifts every demand equally.
std::vector<SessionSpec> make_sessions(const NetworkGraph& g,
                                       std::size_t k_sessions,
                                       DemandWindow window, std::uint64_t seed,
                                       std::size_t paths_per_session = 3);

/// Reads {"sessions": [{"id","src","dst","demand_mbps"}]} and attaches
/// k-shortest candidate paths.
std::vector<SessionSpec> parse_sessions(const nlohmann::json& doc,
                                        const NetworkGraph& g,
                                        std::size_t paths_per_session = 3);
nlohmann::json sessions_to_json(const std::vector<SessionSpec>& sessions,
                                const NetworkGraph& g);

}  // namespace drlte
