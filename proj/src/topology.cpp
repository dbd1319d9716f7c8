#include "drlte/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "drlte/errors.hpp"
#include "drlte/rng.hpp"

namespace drlte {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

std::string describe_link(const std::vector<std::string>& nodes,
                          std::size_t i, const Link& l) {
  std::ostringstream os;
  os << "link " << i << " (";
  os << (l.src < nodes.size() ? nodes[l.src] : "?") << "->";
  os << (l.dst < nodes.size() ? nodes[l.dst] : "?") << ")";
  return os.str();
}

template <typename T>
void fisher_yates(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(eng, i)]);
  }
}

}  // namespace

NetworkGraph::NetworkGraph(std::vector<std::string> nodes,
                           std::vector<Link> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].empty()) {
      throw InvariantError("node " + std::to_string(i) + ": empty id");
    }
    if (!index_.emplace(nodes_[i], i).second) {
      throw InvariantError("duplicate node id '" + nodes_[i] + "'");
    }
  }
  out_.assign(nodes_.size(), {});
  in_.assign(nodes_.size(), {});
  std::vector<std::vector<bool>> seen;
  seen.assign(nodes_.size(), std::vector<bool>(nodes_.size(), false));
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    const std::string what = describe_link(nodes_, i, l);
    if (l.src >= nodes_.size() || l.dst >= nodes_.size()) {
      throw InvariantError(what + ": unknown endpoint");
    }
    if (l.src == l.dst) throw InvariantError(what + ": self-loop");
    if (!(l.capacity_bps > 0.0) || !std::isfinite(l.capacity_bps)) {
      throw InvariantError(what + ": capacity must be positive");
    }
    if (!(l.prop_delay_s >= 0.0) || !std::isfinite(l.prop_delay_s)) {
      throw InvariantError(what + ": propagation delay must be >= 0");
    }
    if (l.buffer_pkts < 1) {
      throw InvariantError(what + ": buffer must hold at least one packet");
    }
    if (seen[l.src][l.dst]) throw InvariantError(what + ": duplicate link");
    seen[l.src][l.dst] = true;
    out_[l.src].push_back(i);
    in_[l.dst].push_back(i);
  }
  for (auto& adj : out_) {
    std::sort(adj.begin(), adj.end(), [&](std::size_t a, std::size_t b) {
      return nodes_[links_[a].dst] < nodes_[links_[b].dst];
    });
  }
}

std::size_t NetworkGraph::node_index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw InvariantError("unknown node '" + std::string(name) + "'");
  }
  return it->second;
}

std::ptrdiff_t NetworkGraph::find_link(std::size_t src,
                                       std::size_t dst) const {
  for (std::size_t li : out_.at(src)) {
    if (links_[li].dst == dst) return static_cast<std::ptrdiff_t>(li);
  }
  return -1;
}

std::vector<std::size_t> NetworkGraph::hops_to(std::size_t dst) const {
  std::vector<std::size_t> dist(nodes_.size(), kUnreached);
  std::queue<std::size_t> q;
  dist.at(dst) = 0;
  q.push(dst);
  while (!q.empty()) {
    std::size_t v = q.front();
    q.pop();
    for (std::size_t li : in_[v]) {
      std::size_t u = links_[li].src;
      if (dist[u] == kUnreached) {
        dist[u] = dist[v] + 1;
        q.push(u);
      }
    }
  }
  return dist;
}

bool NetworkGraph::reachable(std::size_t src, std::size_t dst) const {
  return hops_to(dst).at(src) != kUnreached;
}

std::vector<std::size_t> Path::node_sequence(const NetworkGraph& g) const {
  std::vector<std::size_t> seq;
  if (links.empty()) return seq;
  seq.reserve(links.size() + 1);
  seq.push_back(g.link(links.front()).src);
  for (std::size_t li : links) seq.push_back(g.link(li).dst);
  return seq;
}

bool is_valid_path(const NetworkGraph& g, const Path& p, std::size_t src,
                   std::size_t dst) {
  if (p.links.empty()) return false;
  for (std::size_t li : p.links) {
    if (li >= g.num_links()) return false;
  }
  if (g.link(p.links.front()).src != src) return false;
  if (g.link(p.links.back()).dst != dst) return false;
  for (std::size_t i = 1; i < p.links.size(); ++i) {
    if (g.link(p.links[i - 1]).dst != g.link(p.links[i]).src) return false;
  }
  auto seq = p.node_sequence(g);
  std::sort(seq.begin(), seq.end());
  return std::adjacent_find(seq.begin(), seq.end()) == seq.end();
}

// ---------------------------------------------------------------------------
// Documents

NetworkGraph parse_topology(const nlohmann::json& doc,
                            const LinkDefaults& defaults) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ParseError("topology: expected object with a 'nodes' array");
  }
  if (!doc.contains("links") || !doc["links"].is_array()) {
    throw ParseError("topology: expected a 'links' array");
  }
  std::vector<std::string> nodes;
  for (const auto& n : doc["nodes"]) {
    if (!n.is_string()) throw ParseError("topology: node ids must be strings");
    nodes.push_back(n.get<std::string>());
  }
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i], i);

  std::vector<Link> links;
  std::size_t i = 0;
  for (const auto& l : doc["links"]) {
    const std::string where = "topology: link " + std::to_string(i);
    if (!l.is_object() || !l.contains("src") || !l.contains("dst") ||
        !l["src"].is_string() || !l["dst"].is_string()) {
      throw ParseError(where + ": 'src' and 'dst' strings required");
    }
    auto endpoint = [&](const char* key) {
      auto it = idx.find(l[key].get<std::string>());
      if (it == idx.end()) {
        throw ParseError(where + ": unknown node '" +
                         l[key].get<std::string>() + "'");
      }
      return it->second;
    };
    auto number = [&](const char* key, double fallback) {
      if (!l.contains(key)) return fallback;
      if (!l[key].is_number()) throw ParseError(where + ": '" + key + "' must be a number");
      return l[key].get<double>();
    };
    Link link;
    link.src = endpoint("src");
    link.dst = endpoint("dst");
    link.capacity_bps = number("capacity_mbps", defaults.capacity_bps * 1e-6) * 1e6;
    link.prop_delay_s = number("prop_delay_ms", defaults.prop_delay_s * 1e3) * 1e-3;
    double buf = number("buffer_pkts", static_cast<double>(defaults.buffer_pkts));
    if (buf < 1.0 || buf != std::floor(buf)) {
      throw InvariantError(where + ": buffer_pkts must be a positive integer");
    }
    link.buffer_pkts = static_cast<std::size_t>(buf);
    links.push_back(link);
    ++i;
  }
  return NetworkGraph(std::move(nodes), std::move(links));
}

NetworkGraph load_topology(const std::filesystem::path& file,
                           const LinkDefaults& defaults) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open topology file " + file.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("topology " + file.string() + ": " + e.what());
  }
  return parse_topology(doc, defaults);
}

nlohmann::json topology_to_json(const NetworkGraph& g) {
  nlohmann::json doc;
  doc["nodes"] = g.nodes();
  doc["links"] = nlohmann::json::array();
  for (const Link& l : g.links()) {
    doc["links"].push_back({{"src", g.node_name(l.src)},
                            {"dst", g.node_name(l.dst)},
                            {"capacity_mbps", l.capacity_bps * 1e-6},
                            {"prop_delay_ms", l.prop_delay_s * 1e3},
                            {"buffer_pkts", l.buffer_pkts}});
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Generators

NetworkGraph generate_random_topology(std::size_t n_nodes, std::size_t n_links,
                                      std::uint64_t seed,
                                      const LinkDefaults& defaults) {
  if (n_nodes < 2) throw InvariantError("random topology: need >= 2 nodes");
  if (n_links < n_nodes - 1 || n_links > n_nodes * (n_nodes - 1)) {
    throw InvariantError("random topology: " + std::to_string(n_links) +
                         " links infeasible for " + std::to_string(n_nodes) +
                         " nodes");
  }
  const std::size_t width = std::to_string(n_nodes - 1).size();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    std::string s = std::to_string(i);
    names.push_back("n" + std::string(width - s.size(), '0') + s);
  }

  Engine eng(derive_seed(seed, 0x70706f));
  std::vector<std::size_t> order(n_nodes);
  std::iota(order.begin(), order.end(), 0);
  fisher_yates(order, eng);

  std::vector<std::vector<bool>> used(n_nodes, std::vector<bool>(n_nodes, false));
  std::vector<Link> links;
  auto add = [&](std::size_t a, std::size_t b) {
    used[a][b] = true;
    links.push_back({a, b, defaults.capacity_bps, defaults.prop_delay_s,
                     defaults.buffer_pkts});
  };
  for (std::size_t i = 1; i < n_nodes; ++i) {
    std::size_t parent = order[uniform_index(eng, i)];
    std::size_t child = order[i];
    if (uniform01(eng) < 0.5) {
      add(parent, child);
    } else {
      add(child, parent);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> free_pairs;
  for (std::size_t a = 0; a < n_nodes; ++a) {
    for (std::size_t b = 0; b < n_nodes; ++b) {
      if (a != b && !used[a][b]) free_pairs.emplace_back(a, b);
    }
  }
  fisher_yates(free_pairs, eng);
  for (std::size_t i = 0; links.size() < n_links; ++i) {
    add(free_pairs[i].first, free_pairs[i].second);
  }
  return NetworkGraph(std::move(names), std::move(links));
}

// ---------------------------------------------------------------------------
// Paths

std::vector<Path> k_shortest_paths(const NetworkGraph& g, std::size_t src,
                                   std::size_t dst, std::size_t k) {
  if (src >= g.num_nodes() || dst >= g.num_nodes()) {
    throw InvariantError("k_shortest_paths: node out of range");
  }
  if (src == dst) throw InvariantError("k_shortest_paths: src == dst");
  if (k == 0) throw InvariantError("k_shortest_paths: k must be >= 1");
  const auto dist = g.hops_to(dst);
  if (dist[src] == kUnreached) {
    throw UnreachableError("no path from " + g.node_name(src) + " to " +
                           g.node_name(dst));
  }

  // Rank nodes by name so index sequences compare like name sequences.
  std::vector<std::size_t> rank(g.num_nodes());
  {
    std::vector<std::size_t> by_name(g.num_nodes());
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) {
      return g.node_name(a) < g.node_name(b);
    });
    for (std::size_t r = 0; r < by_name.size(); ++r) rank[by_name[r]] = r;
  }

  // Paths are enumerated one hop count at a time; the BFS distance prunes
  // branches that cannot reach dst within the budget.
  std::vector<Path> out;
  std::vector<bool> on_path(g.num_nodes(), false);
  std::vector<std::size_t> stack;
  for (std::size_t budget = dist[src]; budget < g.num_nodes() && out.size() < k;
       ++budget) {
    std::vector<Path> level;
    auto dfs = [&](auto&& self, std::size_t u) -> void {
      if (u == dst) {
        if (stack.size() == budget) level.push_back(Path{stack});
        return;
      }
      for (std::size_t li : g.out_links(u)) {
        std::size_t v = g.link(li).dst;
        if (on_path[v] || dist[v] == kUnreached) continue;
        if (stack.size() + 1 + dist[v] > budget) continue;
        on_path[v] = true;
        stack.push_back(li);
        self(self, v);
        stack.pop_back();
        on_path[v] = false;
      }
    };
    on_path[src] = true;
    dfs(dfs, src);
    on_path[src] = false;

    std::vector<std::pair<std::vector<std::size_t>, std::size_t>> keyed;
    for (std::size_t i = 0; i < level.size(); ++i) {
      auto seq = level[i].node_sequence(g);
      for (auto& n : seq) n = rank[n];
      keyed.emplace_back(std::move(seq), i);
    }
    std::sort(keyed.begin(), keyed.end());
    for (const auto& [key, i] : keyed) {
      if (out.size() == k) break;
      out.push_back(std::move(level[i]));
    }
  }
  return out;
}

std::vector<SessionSpec> make_sessions(const NetworkGraph& g,
                                       std::size_t k_sessions,
                                       DemandWindow window, std::uint64_t seed,
                                       std::size_t paths_per_session) {
  if (!(window.lo_bps >= 0.0) || !(window.hi_bps > window.lo_bps)) {
    throw InvariantError("make_sessions: window must satisfy 0 <= lo < hi");
  }
  if (k_sessions < 1) throw InvariantError("make_sessions: need >= 1 session");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t d = 0; d < g.num_nodes(); ++d) {
    const auto dist = g.hops_to(d);
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
      if (s != d && dist[s] != kUnreached) pairs.emplace_back(s, d);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  if (pairs.size() < k_sessions) {
    throw InvariantError("make_sessions: graph has only " +
                         std::to_string(pairs.size()) +
                         " reachable pairs, need " + std::to_string(k_sessions));
  }
  Engine eng(derive_seed(seed, 0x5e55));
  fisher_yates(pairs, eng);

  std::vector<SessionSpec> sessions;
  for (std::size_t i = 0; i < k_sessions; ++i) {
    SessionSpec s;
    s.id = static_cast<int>(i + 1);
    s.src = pairs[i].first;
    s.dst = pairs[i].second;
    s.demand_mean_bps = uniform(eng, window.lo_bps, window.hi_bps);
    s.paths = k_shortest_paths(g, s.src, s.dst, paths_per_session);
    sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<SessionSpec> parse_sessions(const nlohmann::json& doc,
                                        const NetworkGraph& g,
                                        std::size_t paths_per_session) {
  if (!doc.is_object() || !doc.contains("sessions") ||
      !doc["sessions"].is_array()) {
    throw ParseError("sessions: expected object with a 'sessions' array");
  }
  std::vector<SessionSpec> out;
  std::size_t i = 0;
  for (const auto& e : doc["sessions"]) {
    const std::string where = "sessions: entry " + std::to_string(i++);
    try {
      SessionSpec s;
      s.id = e.at("id").get<int>();
      s.src = g.node_index(e.at("src").get<std::string>());
      s.dst = g.node_index(e.at("dst").get<std::string>());
      s.demand_mean_bps = e.at("demand_mbps").get<double>() * 1e6;
      if (s.src == s.dst) throw InvariantError(where + ": src == dst");
      if (!(s.demand_mean_bps >= 0.0)) {
        throw InvariantError(where + ": demand must be >= 0");
      }
      s.paths = k_shortest_paths(g, s.src, s.dst, paths_per_session);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(where + ": " + ex.what());
    }
  }
  return out;
}

nlohmann::json sessions_to_json(const std::vector<SessionSpec>& sessions,
                                const NetworkGraph& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sessions) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : s.paths) {
      nlohmann::json seq = nlohmann::json::array();
      for (auto n : p.node_sequence(g)) seq.push_back(g.node_name(n));
      paths.push_back(seq);
    }
    arr.push_back({{"id", s.id},
                   {"src", g.node_name(s.src)},
                   {"dst", g.node_name(s.dst)},
                   {"demand_mbps", s.demand_mean_bps * 1e-6},
                   {"paths", paths}});
  }
  return {{"sessions", arr}};
}

}  // namespace drlte
