#include "drlte/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include "drlte/baselines.hpp"
#include "drlte/errors.hpp"
#include "drlte/smoothing.hpp"

namespace drlte {

using nlohmann::json;

std::string arm_name(Arm a) {
  switch (a) {
    case Arm::kDrlTe: return "drl-te";
    case Arm::kDdpg: return "ddpg";
    case Arm::kSp: return "sp";
    case Arm::kLb: return "lb";
    case Arm::kNum: return "num";
  }
  throw InvariantError("unknown arm");
}

Arm parse_arm(const std::string& name) {
  for (Arm a : {Arm::kDrlTe, Arm::kDdpg, Arm::kSp, Arm::kLb, Arm::kNum}) {
    if (arm_name(a) == name) return a;
  }
  throw ParseError("unknown arm '" + name + "' (expected drl-te, ddpg, sp, lb or num)");
}

bool is_learning_arm(Arm a) { return a == Arm::kDrlTe || a == Arm::kDdpg; }

void ExperimentConfig::validate() const {
  if (epochs < 1) throw InvariantError("config: epochs must be >= 1");
  if (!(sessions.window_hi_bps > sessions.window_lo_bps) || sessions.window_lo_bps < 0.0) {
    throw InvariantError("config: window must satisfy 0 <= lo < hi");
  }
  if (!(sessions.slide_step_bps > 0.0)) throw InvariantError("config: slide step must be > 0");
  if (sessions.windows < 1) throw InvariantError("config: need at least one window");
  if (sessions.k < 1 || sessions.paths_per_session < 1) {
    throw InvariantError("config: need k >= 1 sessions and >= 1 path each");
  }
  if (seeds.empty()) throw InvariantError("config: need at least one seed");
  if (std::any_of(seeds.begin(), seeds.end(), [](std::uint64_t s) { return s == 0; })) {
    throw InvariantError("config: seeds must be nonzero");
  }
  if (arms.empty()) throw InvariantError("config: need at least one arm");
  if (eval_span < 1) throw InvariantError("config: eval span must be >= 1");
  if (!(smoothing_cutoff > 0.0 && smoothing_cutoff < 1.0)) {
    throw InvariantError("config: smoothing cutoff must be in (0, 1)");
  }
  if (!(train_reward_scale > 0.0) || !std::isfinite(train_reward_scale)) {
    throw InvariantError("config: train reward scale must be positive");
  }
  agent.validate();
  sim.validate();
  utility.validate();
}

DemandWindow ExperimentConfig::window(std::size_t w) const {
  const double shift = static_cast<double>(w) * sessions.slide_step_bps;
  return {sessions.window_lo_bps + shift, sessions.window_hi_bps + shift};
}

// ---------------------------------------------------------------------------
// Config documents

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; })) {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

void read_scaled(const json& obj, const char* key, double& out, double scale,
                 const std::string& where) {
  if (!obj.contains(key)) return;
  double v = 0.0;
  read(obj, key, v, where);
  out = v * scale;
}

const char* base_policy_name(BasePolicy p) {
  switch (p) {
    case BasePolicy::kShortestPath: return "sp";
    case BasePolicy::kLoadBalance: return "lb";
    case BasePolicy::kNum: return "num";
  }
  return "num";
}

BasePolicy parse_base_policy(const std::string& s) {
  if (s == "sp") return BasePolicy::kShortestPath;
  if (s == "lb") return BasePolicy::kLoadBalance;
  if (s == "num") return BasePolicy::kNum;
  throw ParseError("agent.base_policy: expected sp, lb or num, got '" + s + "'");
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  check_keys(doc, "config",
             {"version", "topology", "sessions", "arms", "agent", "sim", "utility",
              "state_norm", "train_reward_scale", "epochs", "seeds", "eval_span",
              "smoothing_cutoff", "output_dir", "threads"});
  int version = 0;
  read(doc, "version", version, "config");
  if (version != ExperimentConfig::kVersion) {
    throw ParseError("config: unsupported version " + std::to_string(version) +
                     " (expected " + std::to_string(ExperimentConfig::kVersion) + ")");
  }
  ExperimentConfig cfg;

  if (doc.contains("topology")) {
    const json& t = doc.at("topology");
    check_keys(t, "topology", {"file", "random", "defaults"});
    read(t, "file", cfg.topology.file, "topology");
    if (t.contains("random")) {
      const json& r = t.at("random");
      check_keys(r, "topology.random", {"nodes", "links", "seed"});
      read(r, "nodes", cfg.topology.random_nodes, "topology.random");
      read(r, "links", cfg.topology.random_links, "topology.random");
      read(r, "seed", cfg.topology.random_seed, "topology.random");
      if (!cfg.topology.file.empty()) {
        throw ParseError("topology: give either 'file' or 'random', not both");
      }
    }
    if (t.contains("defaults")) {
      const json& d = t.at("defaults");
      check_keys(d, "topology.defaults", {"capacity_mbps", "delay_ms", "buffer_pkts"});
      read_scaled(d, "capacity_mbps", cfg.topology.defaults.capacity_bps, 1e6,
                  "topology.defaults");
      read_scaled(d, "delay_ms", cfg.topology.defaults.prop_delay_s, 1e-3,
                  "topology.defaults");
      read(d, "buffer_pkts", cfg.topology.defaults.buffer_pkts, "topology.defaults");
    }
  }

  if (doc.contains("sessions")) {
    const json& s = doc.at("sessions");
    check_keys(s, "sessions",
               {"k", "paths_per_session", "window_mbps", "slide_step_mbps", "windows"});
    read(s, "k", cfg.sessions.k, "sessions");
    read(s, "paths_per_session", cfg.sessions.paths_per_session, "sessions");
    if (s.contains("window_mbps")) {
      std::vector<double> w;
      read(s, "window_mbps", w, "sessions");
      if (w.size() != 2) throw ParseError("sessions.window_mbps: expected [lo, hi]");
      cfg.sessions.window_lo_bps = w[0] * 1e6;
      cfg.sessions.window_hi_bps = w[1] * 1e6;
    }
    read_scaled(s, "slide_step_mbps", cfg.sessions.slide_step_bps, 1e6, "sessions");
    read(s, "windows", cfg.sessions.windows, "sessions");
  }

  if (doc.contains("arms")) {
    std::vector<std::string> names;
    read(doc, "arms", names, "config");
    cfg.arms.clear();
    for (const auto& n : names) cfg.arms.push_back(parse_arm(n));
  }

  if (doc.contains("agent")) {
    const json& a = doc.at("agent");
    check_keys(a, "agent",
               {"gamma", "tau", "lr_actor", "lr_critic", "batch_size", "epsilon0",
                "epsilon_decay", "epsilon_min", "noise_amplitude", "base_policy",
                "parallel_batch", "replay"});
    AgentConfig& ac = cfg.agent;
    read(a, "gamma", ac.gamma, "agent");
    read(a, "tau", ac.tau, "agent");
    read(a, "lr_actor", ac.lr_actor, "agent");
    read(a, "lr_critic", ac.lr_critic, "agent");
    read(a, "batch_size", ac.batch_size, "agent");
    read(a, "epsilon0", ac.epsilon0, "agent");
    read(a, "epsilon_decay", ac.epsilon_decay, "agent");
    read(a, "epsilon_min", ac.epsilon_min, "agent");
    read(a, "noise_amplitude", ac.noise_amplitude, "agent");
    read(a, "parallel_batch", ac.parallel_batch, "agent");
    if (a.contains("base_policy")) {
      std::string p;
      read(a, "base_policy", p, "agent");
      ac.base_policy = parse_base_policy(p);
    }
    if (a.contains("replay")) {
      const json& r = a.at("replay");
      check_keys(r, "agent.replay",
                 {"capacity", "beta0", "beta1_start", "xi", "phi", "anneal_epochs"});
      read(r, "capacity", ac.replay.capacity, "agent.replay");
      read(r, "beta0", ac.replay.beta0, "agent.replay");
      read(r, "beta1_start", ac.replay.beta1_start, "agent.replay");
      read(r, "xi", ac.replay.xi, "agent.replay");
      read(r, "phi", ac.replay.phi, "agent.replay");
      read(r, "anneal_epochs", ac.replay.anneal_epochs, "agent.replay");
    }
  }

  if (doc.contains("sim")) {
    const json& s = doc.at("sim");
    check_keys(s, "sim", {"epoch_length_s", "packet_size_bits"});
    read(s, "epoch_length_s", cfg.sim.epoch_length_s, "sim");
    read(s, "packet_size_bits", cfg.sim.packet_size_bits, "sim");
  }
  if (doc.contains("utility")) {
    const json& u = doc.at("utility");
    check_keys(u, "utility", {"alpha1", "alpha2", "sigma"});
    read(u, "alpha1", cfg.utility.alpha1, "utility");
    read(u, "alpha2", cfg.utility.alpha2, "utility");
    read(u, "sigma", cfg.utility.sigma, "utility");
  }
  if (doc.contains("state_norm")) {
    const json& n = doc.at("state_norm");
    check_keys(n, "state_norm", {"throughput_ref_mbps", "delay_ref_ms"});
    read_scaled(n, "throughput_ref_mbps", cfg.state_norm.throughput_ref_bps, 1e6,
                "state_norm");
    read_scaled(n, "delay_ref_ms", cfg.state_norm.delay_ref_s, 1e-3, "state_norm");
  }
  read(doc, "train_reward_scale", cfg.train_reward_scale, "config");
  read(doc, "epochs", cfg.epochs, "config");
  read(doc, "seeds", cfg.seeds, "config");
  read(doc, "eval_span", cfg.eval_span, "config");
  read(doc, "smoothing_cutoff", cfg.smoothing_cutoff, "config");
  read(doc, "output_dir", cfg.output_dir, "config");
  read(doc, "threads", cfg.threads, "config");
  // Without an explicit value the IS exponent reaches 1 at the last epoch.
  const bool anneal_given = doc.contains("agent") && doc.at("agent").contains("replay") &&
                            doc.at("agent").at("replay").contains("anneal_epochs");
  if (!anneal_given) cfg.agent.replay.anneal_epochs = std::max<std::size_t>(cfg.epochs, 1);

  try {
    cfg.validate();
  } catch (const InvariantError& e) {
    throw ParseError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open config " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  ExperimentConfig cfg = parse_experiment_config(doc);
  // Relative topology files are resolved against the config's directory.
  const std::string& f = cfg.topology.file;
  if (!f.empty() && f.rfind("builtin:", 0) != 0 && std::filesystem::path(f).is_relative()) {
    cfg.topology.file = (file.parent_path() / f).lexically_normal().string();
  }
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json topo;
  if (cfg.topology.file.empty()) {
    topo["random"] = {{"nodes", cfg.topology.random_nodes},
                      {"links", cfg.topology.random_links},
                      {"seed", cfg.topology.random_seed}};
  } else {
    topo["file"] = cfg.topology.file;
  }
  topo["defaults"] = {{"capacity_mbps", cfg.topology.defaults.capacity_bps / 1e6},
                      {"delay_ms", cfg.topology.defaults.prop_delay_s / 1e-3},
                      {"buffer_pkts", cfg.topology.defaults.buffer_pkts}};
  json arms = json::array();
  for (Arm a : cfg.arms) arms.push_back(arm_name(a));
  const AgentConfig& ac = cfg.agent;
  return {
      {"version", ExperimentConfig::kVersion},
      {"topology", topo},
      {"sessions",
       {{"k", cfg.sessions.k},
        {"paths_per_session", cfg.sessions.paths_per_session},
        {"window_mbps", {cfg.sessions.window_lo_bps / 1e6, cfg.sessions.window_hi_bps / 1e6}},
        {"slide_step_mbps", cfg.sessions.slide_step_bps / 1e6},
        {"windows", cfg.sessions.windows}}},
      {"arms", arms},
      {"agent",
       {{"gamma", ac.gamma},
        {"tau", ac.tau},
        {"lr_actor", ac.lr_actor},
        {"lr_critic", ac.lr_critic},
        {"batch_size", ac.batch_size},
        {"epsilon0", ac.epsilon0},
        {"epsilon_decay", ac.epsilon_decay},
        {"epsilon_min", ac.epsilon_min},
        {"noise_amplitude", ac.noise_amplitude},
        {"base_policy", base_policy_name(ac.base_policy)},
        {"parallel_batch", ac.parallel_batch},
        {"replay",
         {{"capacity", ac.replay.capacity},
          {"beta0", ac.replay.beta0},
          {"beta1_start", ac.replay.beta1_start},
          {"xi", ac.replay.xi},
          {"phi", ac.replay.phi},
          {"anneal_epochs", ac.replay.anneal_epochs}}}}},
      {"sim",
       {{"epoch_length_s", cfg.sim.epoch_length_s},
        {"packet_size_bits", cfg.sim.packet_size_bits}}},
      {"utility",
       {{"alpha1", cfg.utility.alpha1},
        {"alpha2", cfg.utility.alpha2},
        {"sigma", cfg.utility.sigma}}},
      {"state_norm",
       {{"throughput_ref_mbps", cfg.state_norm.throughput_ref_bps / 1e6},
        {"delay_ref_ms", cfg.state_norm.delay_ref_s / 1e-3}}},
      {"train_reward_scale", cfg.train_reward_scale},
      {"epochs", cfg.epochs},
      {"seeds", cfg.seeds},
      {"eval_span", cfg.eval_span},
      {"smoothing_cutoff", cfg.smoothing_cutoff},
      {"output_dir", cfg.output_dir},
      {"threads", cfg.threads},
  };
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* dir = std::getenv("DRLTE_OUTPUT_DIR"); dir && *dir) {
    cfg.output_dir = dir;
  }
  if (const char* t = std::getenv("DRLTE_THREADS"); t && *t) {
    std::size_t n = 0;
    const char* end = t + std::char_traits<char>::length(t);
    auto [p, ec] = std::from_chars(t, end, n);
    if (ec != std::errc{} || p != end) {
      throw ParseError(std::string("DRLTE_THREADS: not a count: '") + t + "'");
    }
    cfg.threads = n;
  }
}

// ---------------------------------------------------------------------------
// Runs

std::string RunRecord::file_stem() const {
  return "w" + std::to_string(window_index) + "_s" + std::to_string(seed) + "_" +
         arm_name(arm);
}

namespace {

NetworkGraph build_graph(const TopologySource& src) {
  if (src.file.empty()) {
    return generate_random_topology(src.random_nodes, src.random_links,
                                    src.random_seed, src.defaults);
  }
  constexpr std::string_view kBuiltin = "builtin:";
  if (src.file.rfind(kBuiltin, 0) == 0) {
    const std::string name = src.file.substr(kBuiltin.size());
    return load_topology(std::filesystem::path(DRLTE_DATA_DIR) / "topologies" /
                             (name + ".json"),
                         src.defaults);
  }
  return load_topology(src.file, src.defaults);
}

constexpr std::uint64_t kSimStream = 101;
constexpr std::uint64_t kAgentStream = 102;

}  // namespace

Scenario build_scenario(const ExperimentConfig& cfg, std::size_t window_index,
                        std::uint64_t seed) {
  Scenario sc;
  sc.graph = build_graph(cfg.topology);
  sc.sessions = make_sessions(sc.graph, cfg.sessions.k, cfg.window(window_index), seed,
                              cfg.sessions.paths_per_session);
  return sc;
}

SplitAction baseline_action(BasePolicy policy, const Scenario& sc) {
  switch (policy) {
    case BasePolicy::kShortestPath: return sp_action(sc.sessions);
    case BasePolicy::kLoadBalance: return lb_action(sc.sessions);
    case BasePolicy::kNum: return num_action(num_solve(sc.graph, sc.sessions));
  }
  throw InvariantError("unknown base policy");
}

RunRecord run_single(const ExperimentConfig& cfg, std::size_t window_index,
                     std::uint64_t seed, Arm arm) {
  const Scenario sc = build_scenario(cfg, window_index, seed);
  SimConfig sim_cfg = cfg.sim;
  sim_cfg.seed = derive_seed(seed, kSimStream);
  Simulator sim(sc.graph, sc.sessions, sim_cfg);

  RunRecord rec;
  rec.window_index = window_index;
  rec.window = cfg.window(window_index);
  rec.seed = seed;
  rec.arm = arm;
  rec.rows.reserve(cfg.epochs);

  auto make_row = [&](const EpochObservation& obs, double r) {
    EpochRow row;
    row.epoch = obs.epoch;
    row.reward = r;
    for (double x : obs.throughput_bps) row.x_mbps.push_back(x * 1e-6);
    for (double z : obs.delay_s) row.z_ms.push_back(z * 1e3);
    row.drops = obs.total_drops();
    return row;
  };

  if (!is_learning_arm(arm)) {
    const BasePolicy policy = arm == Arm::kSp   ? BasePolicy::kShortestPath
                              : arm == Arm::kLb ? BasePolicy::kLoadBalance
                                                : BasePolicy::kNum;
    const SplitAction action = baseline_action(policy, sc);
    for (std::size_t t = 0; t < cfg.epochs; ++t) {
      const EpochObservation obs = sim.run_epoch(action);
      rec.rows.push_back(make_row(obs, reward(obs, cfg.utility)));
    }
  } else {
    AgentConfig ac = cfg.agent;
    ac.seed = derive_seed(seed, kAgentStream);
    if (arm == Arm::kDdpg) {
      ac.te_aware = false;
      ac.replay.beta0 = 0.0;
    } else {
      ac.te_aware = true;
    }
    Agent agent(2 * sc.sessions.size(), action_layout(sc.sessions), ac);
    if (ac.te_aware) agent.set_base_action(baseline_action(ac.base_policy, sc));

    std::vector<double> state(agent.state_dim(), 0.0);
    for (std::size_t t = 0; t < cfg.epochs; ++t) {
      const double eps = agent.epsilon();
      const SplitAction action = agent.act_explore(state);
      const EpochObservation obs = sim.run_epoch(action);
      const double r = reward(obs, cfg.utility);
      std::vector<double> next = observation_to_state(obs, cfg.state_norm);
      TrainDiagnostics diag;
      try {
        diag = agent.train_step({state, action.flatten(), r * cfg.train_reward_scale, next});
      } catch (const DivergenceError& e) {
        throw DivergenceError("run " + rec.file_stem() + " diverged at epoch " +
                              std::to_string(t) + ": " + e.what());
      }
      EpochRow row = make_row(obs, r);
      row.epsilon = eps;
      row.mean_abs_td = diag.mean_abs_td / cfg.train_reward_scale;
      rec.rows.push_back(std::move(row));
      state = std::move(next);
    }
  }
  finalize_record(rec, cfg.eval_span, cfg.smoothing_cutoff);
  return rec;
}

namespace {

struct Job {
  std::size_t window;
  std::uint64_t seed;
  Arm arm;
};

std::vector<Job> jobs_of(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (std::size_t w = 0; w < cfg.sessions.windows; ++w) {
    for (std::uint64_t s : cfg.seeds) {
      for (Arm a : cfg.arms) jobs.push_back({w, s, a});
    }
  }
  return jobs;
}

}  // namespace

std::vector<RunRecord> run_experiment_serial(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunRecord> out;
  for (const Job& j : jobs_of(cfg)) out.push_back(run_single(cfg, j.window, j.seed, j.arm));
  return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<Job> jobs = jobs_of(cfg);
  std::vector<RunRecord> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const int threads = cfg.threads > 0 ? static_cast<int>(cfg.threads) : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Job& j = jobs[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = run_single(cfg, j.window, j.seed, j.arm);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void finalize_record(RunRecord& rec, std::size_t eval_span, double cutoff) {
  std::vector<double> rewards;
  rewards.reserve(rec.rows.size());
  for (const auto& r : rec.rows) rewards.push_back(r.reward);
  if (rewards.empty()) return;
  const auto norm = normalize_rewards(rewards);
  const auto smooth =
      norm.size() > kSmoothingPad ? smooth_rewards(norm, cutoff) : norm;
  for (std::size_t i = 0; i < rec.rows.size(); ++i) {
    rec.rows[i].reward_norm = norm[i];
    rec.rows[i].reward_smooth = smooth[i];
  }

  RunSummary s;
  s.span = std::min(eval_span, rec.rows.size());
  const std::size_t begin = rec.rows.size() - s.span;
  for (std::size_t i = begin; i < rec.rows.size(); ++i) {
    const EpochRow& r = rec.rows[i];
    s.mean_utility += r.reward;
    double x = 0.0, z = 0.0;
    for (double v : r.x_mbps) x += v;
    for (double v : r.z_ms) z += v;
    const double k = static_cast<double>(std::max<std::size_t>(r.x_mbps.size(), 1));
    s.mean_throughput_mbps += x / k;
    s.mean_delay_ms += z / k;
    s.mean_drops += static_cast<double>(r.drops);
  }
  const double n = static_cast<double>(s.span);
  s.mean_utility /= n;
  s.mean_throughput_mbps /= n;
  s.mean_delay_ms /= n;
  s.mean_drops /= n;
  rec.summary = s;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void put(std::string& line, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, p);
}

void put(std::string& line, std::uint64_t v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  line.append(buf, p);
}

}  // namespace

void write_csv(std::ostream& os, const RunRecord& rec) {
  const std::size_t k = rec.rows.empty() ? 0 : rec.rows.front().x_mbps.size();
  std::string line = "epoch,reward,reward_norm,reward_smooth";
  for (std::size_t i = 1; i <= k; ++i) line += ",x_" + std::to_string(i);
  for (std::size_t i = 1; i <= k; ++i) line += ",z_" + std::to_string(i);
  line += ",drops,epsilon,mean_abs_td\n";
  os << line;
  for (const EpochRow& r : rec.rows) {
    line.clear();
    put(line, r.epoch);
    for (double v : {r.reward, r.reward_norm, r.reward_smooth}) {
      line += ',';
      put(line, v);
    }
    for (double v : r.x_mbps) {
      line += ',';
      put(line, v);
    }
    for (double v : r.z_ms) {
      line += ',';
      put(line, v);
    }
    line += ',';
    put(line, r.drops);
    line += ',';
    put(line, r.epsilon);
    line += ',';
    put(line, r.mean_abs_td);
    line += '\n';
    os << line;
  }
}

void export_csv(const RunRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, rec);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<EpochRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("csv: missing header");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 7 || (header.size() - 7) % 2 != 0) {
    throw ParseError("csv: unexpected header");
  }
  const std::size_t k = (header.size() - 7) / 2;
  std::vector<EpochRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.emplace_back(line.data() + start,
                         (comma == std::string::npos ? line.size() : comma) - start);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != header.size()) {
      throw ParseError("csv line " + std::to_string(line_no) + ": wrong cell count");
    }
    auto num = [&](std::string_view c, auto& out) {
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), out);
      if (ec != std::errc{} || p != c.data() + c.size()) {
        throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" +
                         std::string(c) + "'");
      }
    };
    EpochRow r;
    num(cells[0], r.epoch);
    num(cells[1], r.reward);
    num(cells[2], r.reward_norm);
    num(cells[3], r.reward_smooth);
    r.x_mbps.resize(k);
    r.z_ms.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      num(cells[4 + i], r.x_mbps[i]);
      num(cells[4 + k + i], r.z_ms[i]);
    }
    num(cells[4 + 2 * k], r.drops);
    num(cells[5 + 2 * k], r.epsilon);
    num(cells[6 + 2 * k], r.mean_abs_td);
    rows.push_back(std::move(r));
  }
  return rows;
}

json summary_to_json(const std::vector<RunRecord>& records) {
  json runs = json::array();
  for (const RunRecord& r : records) {
    runs.push_back({{"window_index", r.window_index},
                    {"window_mbps", {r.window.lo_bps / 1e6, r.window.hi_bps / 1e6}},
                    {"seed", r.seed},
                    {"arm", arm_name(r.arm)},
                    {"epochs", r.rows.size()},
                    {"span", r.summary.span},
                    {"mean_utility", r.summary.mean_utility},
                    {"mean_throughput_mbps", r.summary.mean_throughput_mbps},
                    {"mean_delay_ms", r.summary.mean_delay_ms},
                    {"mean_drops", r.summary.mean_drops},
                    {"csv", r.file_stem() + ".csv"}});
  }
  return {{"runs", runs}};
}

void export_records(const std::vector<RunRecord>& records,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const RunRecord& r : records) export_csv(r, dir / (r.file_stem() + ".csv"));
  std::ofstream out(dir / "summary.json");
  if (!out) throw std::runtime_error("cannot write summary.json in " + dir.string());
  out << summary_to_json(records).dump(2) << '\n';
}

}  // namespace drlte
