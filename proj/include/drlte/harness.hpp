#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "drlte/agent.hpp"
#include "drlte/objective.hpp"
#include "drlte/topology.hpp"
#include "drlte/traffic_sim.hpp"

namespace drlte {

enum class Arm { kDrlTe, kDdpg, kSp, kLb, kNum };

std::string arm_name(Arm a);  // "drl-te", "ddpg", "sp", "lb", "num"
Arm parse_arm(const std::string& name);
bool is_learning_arm(Arm a);

struct TopologySource {
  std::string file;  // empty => random
  std::size_t random_nodes = 20;
  std::size_t random_links = 80;
  std::uint64_t random_seed = 1;
  LinkDefaults defaults;
};

struct SessionPlan {
  std::size_t k = 20;
  std::size_t paths_per_session = 3;
  double window_lo_bps = 10e6;
  double window_hi_bps = 30e6;
  double slide_step_bps = 5e6;
  std::size_t windows = 1;  // number of window positions
};

struct ExperimentConfig {
  static constexpr int kVersion = 1;

  TopologySource topology;
  SessionPlan sessions;
  std::vector<Arm> arms{Arm::kDrlTe};
  AgentConfig agent;
  SimConfig sim;
  UtilityConfig utility;
  StateNormalization state_norm;
  /// Multiplies the reward fed to the learner (never the recorded one).
  double train_reward_scale = 1.0;
  std::size_t epochs = 10000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t eval_span = 1000;
  double smoothing_cutoff = 0.02;
  std::string output_dir;
  std::size_t threads = 0;  // 0 => OpenMP default

  void validate() const;
  /// Demand window of position `w`.
  DemandWindow window(std::size_t w) const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// DRLTE_OUTPUT_DIR and DRLTE_THREADS replace the matching fields.
void apply_env_overrides(ExperimentConfig& cfg);

struct EpochRow {
  std::uint64_t epoch = 0;
  double reward = 0.0;
  double reward_norm = 0.0;
  double reward_smooth = 0.0;
  std::vector<double> x_mbps;
  std::vector<double> z_ms;
  std::uint64_t drops = 0;
  double epsilon = 0.0;
  double mean_abs_td = 0.0;
};

struct RunSummary {
  double mean_utility = 0.0;
  double mean_throughput_mbps = 0.0;  // per session
  double mean_delay_ms = 0.0;         // per session
  double mean_drops = 0.0;
  std::size_t span = 0;
};

struct RunRecord {
  std::size_t window_index = 0;
  DemandWindow window;
  std::uint64_t seed = 0;
  Arm arm = Arm::kDrlTe;
  std::vector<EpochRow> rows;
  RunSummary summary;

  std::string file_stem() const;  // w0_s1_drl-te
};

/// Topology and sessions for one (window, seed).
struct Scenario {
  NetworkGraph graph;
  std::vector<SessionSpec> sessions;
};
Scenario build_scenario(const ExperimentConfig& cfg, std::size_t window_index,
                        std::uint64_t seed);

/// The static action an arm plays, or the base action a learner explores
/// around.
SplitAction baseline_action(BasePolicy policy, const Scenario& sc);

/// One (window, seed, arm) run of `cfg.epochs` epochs.
RunRecord run_single(const ExperimentConfig& cfg, std::size_t window_index,
                     std::uint64_t seed, Arm arm);

/// Every (window, seed, arm) in that order. The parallel form spreads runs
/// over OpenMP threads and returns the same records.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);
std::vector<RunRecord> run_experiment_serial(const ExperimentConfig& cfg);

/// Fills reward_norm, reward_smooth and the summary from the raw rows.
/// Series too short for the smoother copy reward_norm into reward_smooth.
void finalize_record(RunRecord& rec, std::size_t eval_span, double cutoff);

void write_csv(std::ostream& os, const RunRecord& rec);
void export_csv(const RunRecord& rec, const std::filesystem::path& path);
/// Parses a CSV produced by export_csv back into rows.
std::vector<EpochRow> read_csv(std::istream& is);

/// Writes one CSV per run plus summary.json into `dir`.
void export_records(const std::vector<RunRecord>& records,
                    const std::filesystem::path& dir);

nlohmann::json summary_to_json(const std::vector<RunRecord>& records);

}  // namespace drlte
