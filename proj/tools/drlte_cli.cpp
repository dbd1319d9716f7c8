#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "drlte/baselines.hpp"
#include "drlte/errors.hpp"
#include "drlte/harness.hpp"
#include "drlte/topology.hpp"

namespace {

using nlohmann::json;

int cmd_run(const std::string& config_path, const std::string& output) {
  drlte::ExperimentConfig cfg = drlte::load_experiment_config(config_path);
  drlte::apply_env_overrides(cfg);
  if (!output.empty()) cfg.output_dir = output;
  if (cfg.output_dir.empty()) cfg.output_dir = "results";
  const auto records = drlte::run_experiment(cfg);
  drlte::export_records(records, cfg.output_dir);
  for (const auto& r : records) {
    std::cout << r.file_stem() << " utility=" << r.summary.mean_utility
              << " delay_ms=" << r.summary.mean_delay_ms
              << " throughput_mbps=" << r.summary.mean_throughput_mbps << '\n';
  }
  std::cout << "wrote " << records.size() << " runs to " << cfg.output_dir << '\n';
  return 0;
}

int cmd_solve_num(const std::string& topology, const std::string& sessions_file,
                  const std::string& config_path, std::size_t window,
                  std::uint64_t seed) {
  drlte::NetworkGraph g;
  std::vector<drlte::SessionSpec> sessions;
  if (!config_path.empty()) {
    const auto cfg = drlte::load_experiment_config(config_path);
    auto sc = drlte::build_scenario(cfg, window, seed);
    g = std::move(sc.graph);
    sessions = std::move(sc.sessions);
  } else {
    if (topology.empty() || sessions_file.empty()) {
      throw drlte::ParseError("solve-num needs --config or both --topology and --sessions");
    }
    g = drlte::load_topology(topology);
    std::ifstream in(sessions_file);
    if (!in) throw drlte::ParseError("cannot open " + sessions_file);
    sessions = drlte::parse_sessions(json::parse(in), g);
  }
  const auto sol = drlte::num_solve(g, sessions);
  const auto action = drlte::num_action(sol);
  json out;
  out["objective"] = sol.diagnostics.objective;
  out["converged"] = sol.diagnostics.converged;
  out["iterations"] = sol.diagnostics.iterations;
  out["max_capacity_violation"] = sol.diagnostics.max_capacity_violation;
  out["stationarity"] = sol.diagnostics.stationarity;
  out["complementary_slackness"] = sol.diagnostics.complementary_slackness;
  json arr = json::array();
  for (std::size_t k = 0; k < sessions.size(); ++k) {
    std::vector<double> flows;
    for (double f : sol.flows_bps[k]) flows.push_back(f / 1e6);
    arr.push_back({{"id", sessions[k].id},
                   {"src", g.node_name(sessions[k].src)},
                   {"dst", g.node_name(sessions[k].dst)},
                   {"demand_mbps", sessions[k].demand_mean_bps / 1e6},
                   {"throughput_mbps", sol.throughput_bps[k] / 1e6},
                   {"flows_mbps", flows},
                   {"split", action.ratios[k]}});
  }
  out["sessions"] = arr;
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_gen_topology(std::size_t nodes, std::size_t links, std::uint64_t seed,
                     const std::string& out_path) {
  const auto g = drlte::generate_random_topology(nodes, links, seed);
  const std::string text = drlte::topology_to_json(g).dump(2);
  if (out_path.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text << '\n';
  }
  return 0;
}

int cmd_export(const std::string& config_path, std::size_t window, std::uint64_t seed,
               const std::string& arm, const std::string& out_path) {
  const auto cfg = drlte::load_experiment_config(config_path);
  const auto rec = drlte::run_single(cfg, window, seed, drlte::parse_arm(arm));
  if (out_path.empty()) {
    drlte::write_csv(std::cout, rec);
  } else {
    drlte::export_csv(rec, out_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic engineering experiments with a packet simulator and an actor-critic agent"};
  app.require_subcommand(1);

  std::string config, output;
  auto* run = app.add_subcommand("run", "run every (window, seed, arm) of a config");
  run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "output directory");

  std::string topology, sessions;
  std::size_t window = 0;
  std::uint64_t seed = 1;
  auto* solve = app.add_subcommand("solve-num", "solve the rate allocation program");
  solve->add_option("--topology", topology, "topology JSON")->check(CLI::ExistingFile);
  solve->add_option("--sessions", sessions, "sessions JSON")->check(CLI::ExistingFile);
  solve->add_option("--config", config, "take topology and sessions from a config")
      ->check(CLI::ExistingFile);
  solve->add_option("--window", window, "window index (with --config)");
  solve->add_option("--seed", seed, "session seed (with --config)");

  std::size_t nodes = 20, links = 80;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-topology", "generate a random connected topology");
  gen->add_option("--nodes", nodes, "node count");
  gen->add_option("--links", links, "directed link count");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("-o,--out", out_path, "output file (stdout if omitted)");

  std::string arm = "drl-te";
  auto* exp = app.add_subcommand("export", "run one (window, seed, arm) and write its CSV");
  exp->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  exp->add_option("--window", window, "window index");
  exp->add_option("--seed", seed, "seed");
  exp->add_option("--arm", arm, "drl-te, ddpg, sp, lb or num");
  exp->add_option("-o,--out", out_path, "CSV path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, output);
    if (*solve) return cmd_solve_num(topology, sessions, config, window, seed);
    if (*gen) return cmd_gen_topology(nodes, links, seed, out_path);
    if (*exp) return cmd_export(config, window, seed, arm, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
