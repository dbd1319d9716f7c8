// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drlte/agent.hpp"
#include "drlte/baselines.hpp"
#include "drlte/harness.hpp"
#include "drlte/nn.hpp"
#include "drlte/replay.hpp"
#include "drlte/rng.hpp"
#include "drlte/topology.hpp"
#include "drlte/traffic_sim.hpp"
#include "gradcheck.hpp"
#include "stats.hpp"

using namespace drlte;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome gradients() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto rc = testing::random_case(1000 + seed);
    const auto r = testing::check_gradients(rc.p, rc.x, rc.g);
    worst = std::max({worst, r.max_rel_param, r.max_rel_input});
  }
  return {worst <= 1e-5, "100 pairs, max relative error " + fmt("%.3g", worst)};
}

// 2 ------------------------------------------------------------------------

Outcome sum_tree() {
  std::vector<double> pri(16);
  for (std::size_t i = 0; i < 16; ++i) pri[i] = 0.25 + 0.5 * static_cast<double>(i);
  bool ok = true;
  std::ostringstream det;
  for (double beta0 : {0.0, 0.6, 1.0}) {
    ReplayConfig cfg;
    cfg.capacity = 16;
    cfg.beta0 = beta0;
    PrioritizedBuffer buf(cfg);
    for (std::size_t i = 0; i < 16; ++i) buf.insert({{0.0}, {1.0}, 0.0, {0.0}});
    for (std::size_t i = 0; i < 16; ++i) buf.update_priority(i, pri[i]);
    std::vector<double> probs(16);
    double z = 0.0;
    for (double p : pri) z += std::pow(p, beta0);
    for (std::size_t i = 0; i < 16; ++i) probs[i] = std::pow(pri[i], beta0) / z;
    std::vector<std::size_t> counts(16, 0);
    Engine eng(derive_seed(2, static_cast<std::uint64_t>(beta0 * 10)));
    for (int d = 0; d < 100000; ++d) ++counts[buf.sample_batch(1, 1.0, eng)[0].index];
    const auto chi = testing::chi_square(counts, probs);
    ok = ok && chi.p_value > 0.01;
    if (beta0 == 0.0) {
      for (std::size_t i = 0; i < 16; ++i) ok = ok && std::abs(probs[i] - 1.0 / 16.0) < 1e-15 &&
                                                std::abs(buf.probability(i) - 1.0 / 16.0) < 1e-15;
    }
    det << "beta0=" << beta0 << " p=" << fmt("%.3f", chi.p_value) << " ";
  }
  return {ok, det.str() + "(uniform at beta0=0)"};
}

// 3 ------------------------------------------------------------------------

Outcome md1() {
  const double cap = 1e8, bits = 8000.0, service = bits / cap;
  bool ok = true;
  std::ostringstream det;
  for (double rho : {0.3, 0.5, 0.8}) {
    for (double prop : {0.0, 1e-3}) {
      NetworkGraph g({"s", "t"}, {Link{0, 1, cap, prop, 1000000}});
      SessionSpec s{1, 0, 1, rho * cap, k_shortest_paths(g, 0, 1, 1)};
      SimConfig cfg;
      cfg.seed = derive_seed(3, static_cast<std::uint64_t>(rho * 10));
      Simulator sim(g, {s}, cfg);
      double sum = 0.0;
      std::uint64_t n = 0;
      while (n < 100000) {
        const auto obs = sim.run_epoch(SplitAction{{{1.0}}});
        sum += obs.delay_s[0] * static_cast<double>(obs.delivered[0]);
        n += obs.delivered[0];
      }
      const double mu = 1.0 / service;
      const double expect = 1.0 / mu + rho / (2.0 * mu * (1.0 - rho)) + prop;
      const double err = std::abs(sum / static_cast<double>(n) - expect) / expect;
      ok = ok && err <= 0.05;
      det << "rho=" << rho << (prop > 0 ? "+1ms" : "") << " err=" << fmt("%.2f%%", 100 * err)
          << " ";
    }
  }
  return {ok, det.str()};
}

// 4 ------------------------------------------------------------------------

struct SmallInstance {
  NetworkGraph g;
  std::vector<SessionSpec> sessions;
};

SmallInstance small_instance(std::uint64_t seed) {
  Engine eng(derive_seed(seed, 4));
  for (;;) {
    std::vector<Link> links;
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        if (a != b && uniform01(eng) < 0.6) {
          links.push_back({a, b, std::round(uniform(eng, 1.0, 5.0) * 10.0) * 1e5, 1e-3, 100});
        }
      }
    }
    if (links.empty()) continue;
    NetworkGraph g({"a", "b", "c", "d"}, links);
    std::vector<SessionSpec> ss;
    for (int k = 0; k < 2; ++k) {
      const std::size_t s = eng() % 4, d = eng() % 4;
      if (s == d || !g.reachable(s, d)) continue;
      ss.push_back({k, s, d, std::round(uniform(eng, 0.5, 4.0) * 10.0) * 1e5,
                    k_shortest_paths(g, s, d, 2)});
    }
    if (ss.size() == 2) return {g, ss};
  }
}

// Exhaustive grid over per-path flows (Mbps), refined around the best point.
double grid_optimum(const SmallInstance& in) {
  std::vector<std::vector<std::size_t>> var_links;
  std::vector<std::size_t> var_session;
  std::vector<double> demand, cap;
  for (std::size_t k = 0; k < in.sessions.size(); ++k) {
    demand.push_back(in.sessions[k].demand_mean_bps * 1e-6);
    for (const auto& p : in.sessions[k].paths) {
      var_links.push_back(p.links);
      var_session.push_back(k);
    }
  }
  for (const auto& l : in.g.links()) cap.push_back(l.capacity_bps * 1e-6);
  const std::size_t n = var_links.size();
  auto value = [&](const std::vector<double>& f) {
    std::vector<double> x(demand.size(), 0.0), load(cap.size(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      x[var_session[v]] += f[v];
      for (std::size_t l : var_links[v]) load[l] += f[v];
    }
    for (std::size_t l = 0; l < cap.size(); ++l) {
      if (load[l] > cap[l] * (1 + 1e-12)) return -std::numeric_limits<double>::infinity();
    }
    double u = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] <= 0.0 || x[k] > demand[k] * (1 + 1e-12)) {
        return -std::numeric_limits<double>::infinity();
      }
      u += std::log(x[k]);
    }
    return u;
  };
  std::vector<double> lo(n, 0.0), best(n, 0.0), f(n);
  double step = 0.1, best_val = -std::numeric_limits<double>::infinity();
  std::size_t points =
      static_cast<std::size_t>(std::ceil(*std::max_element(demand.begin(), demand.end()) / step)) + 1;
  for (int level = 0; level < 8; ++level) {
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      for (std::size_t v = 0; v < n; ++v) f[v] = lo[v] + step * static_cast<double>(idx[v]);
      const double val = value(f);
      if (val > best_val) {
        best_val = val;
        best = f;
      }
      std::size_t v = 0;
      while (v < n && ++idx[v] == points) idx[v++] = 0;
      if (v == n) break;
    }
    for (std::size_t v = 0; v < n; ++v) lo[v] = std::max(0.0, best[v] - 2.0 * step);
    step /= 5.0;
    points = 21;
  }
  return best_val;
}

Outcome num_optimality() {
  bool ok = true;
  std::ostringstream det;
  {
    NetworkGraph g({"a", "b"}, {Link{0, 1, 100e6, 1e-3, 100}});
    Path p{{0}};
    std::vector<SessionSpec> ss{{0, 0, 1, 80e6, {p}}, {1, 0, 1, 80e6, {p}}};
    const auto sol = num_solve(g, ss);
    const double e = std::max(std::abs(sol.throughput_bps[0] - 50e6),
                              std::abs(sol.throughput_bps[1] - 50e6)) / 50e6;
    ok = ok && e <= 1e-3;
    det << "shared link rel err " << fmt("%.2g", e) << "; ";
  }
  double worst_gap = 0.0, worst_resid = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto in = small_instance(seed);
    const auto sol = num_solve(in.g, in.sessions);
    worst_gap = std::max(worst_gap, std::abs(sol.diagnostics.objective - grid_optimum(in)));
    const auto& d = sol.diagnostics;
    worst_resid = std::max({worst_resid, d.max_capacity_violation, d.max_demand_violation,
                            d.flow_consistency});
  }
  ok = ok && worst_gap <= 1e-3 && worst_resid <= 1e-6;
  det << "20 grid instances max |obj gap| " << fmt("%.2g", worst_gap) << ", max residual "
      << fmt("%.2g", worst_resid);
  return {ok, det.str()};
}

// 5, 6 -----------------------------------------------------------------------

struct Study {
  std::map<std::pair<std::uint64_t, Arm>, RunRecord> runs;
};

Study run_study(const ExperimentConfig& base, std::size_t static_epochs) {
  Study st;
  ExperimentConfig learn = base;
  learn.arms = {Arm::kDrlTe, Arm::kDdpg};
  ExperimentConfig fixed = base;
  fixed.arms = {Arm::kSp, Arm::kLb, Arm::kNum};
  fixed.epochs = static_epochs;
  for (const auto* cfg : {&learn, &fixed}) {
    auto t0 = std::chrono::steady_clock::now();
    for (auto& r : run_experiment(*cfg)) st.runs[{r.seed, r.arm}] = std::move(r);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  ran " << cfg->arms.size() * cfg->seeds.size() << " runs of "
              << cfg->epochs << " epochs in " << fmt("%.0f", secs) << " s\n";
  }
  for (const auto& [key, r] : st.runs) {
    std::cerr << "  seed " << key.first << " " << arm_name(key.second)
              << ": utility " << fmt("%.3f", r.summary.mean_utility) << ", delay "
              << fmt("%.3f", r.summary.mean_delay_ms) << " ms\n";
  }
  return st;
}

Outcome learning_curve(const ExperimentConfig& cfg, const Study& st) {
  int hits = 0;
  std::ostringstream det;
  for (std::uint64_t seed : cfg.seeds) {
    const auto& rows = st.runs.at({seed, Arm::kDrlTe}).rows;
    std::size_t first = rows.size();
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].reward_smooth >= 0.8) {
        first = t;
        break;
      }
    }
    hits += first <= 3000 ? 1 : 0;
    det << "s" << seed << ":" << (first < rows.size() ? std::to_string(first) : "never") << " ";
  }
  return {hits >= 3, std::to_string(hits) + "/5 seeds reach 0.8 by epoch 3000 (" + det.str() + ")"};
}

Outcome ranking(const ExperimentConfig& cfg, const Study& st) {
  int util_wins = 0, delay_wins = 0;
  std::map<Arm, int> beaten;
  for (std::uint64_t seed : cfg.seeds) {
    const auto& d = st.runs.at({seed, Arm::kDrlTe}).summary;
    bool all = true;
    for (Arm a : {Arm::kSp, Arm::kLb, Arm::kNum, Arm::kDdpg}) {
      const bool win = d.mean_utility > st.runs.at({seed, a}).summary.mean_utility;
      beaten[a] += win ? 1 : 0;
      all = all && win;
    }
    util_wins += all ? 1 : 0;
    delay_wins += d.mean_delay_ms < st.runs.at({seed, Arm::kNum}).summary.mean_delay_ms ? 1 : 0;
  }
  std::ostringstream det;
  det << "utility beats all arms in " << util_wins << "/5 seeds (vs sp " << beaten[Arm::kSp]
      << ", lb " << beaten[Arm::kLb] << ", num " << beaten[Arm::kNum] << ", ddpg "
      << beaten[Arm::kDdpg] << "); delay below num in " << delay_wins << "/5";
  return {util_wins >= 4 && delay_wins >= 4, det.str()};
}

// 7 ------------------------------------------------------------------------

bool on_simplices(const SplitAction& a, const std::vector<std::size_t>& groups) {
  if (a.ratios.size() != groups.size()) return false;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (a.ratios[k].size() != groups[k]) return false;
    double s = 0.0;
    for (double w : a.ratios[k]) {
      if (!(w >= -1e-9)) return false;
      s += w;
    }
    if (!(std::abs(s - 1.0) <= 1e-9)) return false;
  }
  return true;
}

Outcome fuzz() {
  Engine eng(7);
  // Actions.
  std::size_t bad_actions = 0;
  {
    const std::vector<std::size_t> groups{3, 3, 2, 1, 3, 3, 2, 3};
    AgentConfig cfg;
    cfg.seed = 7;
    Agent ag(16, groups, cfg);
    SplitAction base;
    for (std::size_t n : groups) base.ratios.emplace_back(n, 1.0 / static_cast<double>(n));
    ag.set_base_action(base);
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> s(16);
      for (double& v : s) v = uniform(eng, -10.0, 10.0);
      const double eps = uniform01(eng);
      if (!on_simplices(ag.act_explore_with(s, eps), groups)) ++bad_actions;
      if (!on_simplices(ag.act_greedy(s), groups)) ++bad_actions;
    }
  }
  // Conservation on random topologies and actions.
  std::size_t bad_epochs = 0, epochs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = generate_random_topology(10, 30, seed, {1e7, 1e-3, 20});
    const auto ss = make_sessions(g, 10, {1e6, 2e7}, seed, 3);
    Simulator sim(g, ss, {.epoch_length_s = 0.2, .seed = seed});
    for (int e = 0; e < 50; ++e, ++epochs) {
      SplitAction a;
      for (const auto& s : ss) {
        std::vector<double> r(s.paths.size());
        double sum = 0.0;
        for (double& w : r) sum += (w = uniform01(eng) < 0.2 ? 0.0 : uniform01(eng));
        if (sum == 0.0) r[0] = sum = 1.0;
        for (double& w : r) w /= sum;
        a.ratios.push_back(r);
      }
      sim.run_epoch(a);
      const auto l = sim.ledger();
      if (l.generated != l.delivered + l.dropped + l.in_flight) ++bad_epochs;
    }
  }
  // Soft-update identity after every train step.
  double worst = 0.0;
  std::size_t steps = 0;
  {
    const std::vector<std::size_t> groups{3, 2, 3};
    AgentConfig cfg;
    cfg.batch_size = 16;
    cfg.replay.capacity = 512;
    Agent ag(6, groups, cfg);
    for (int i = 0; i < 300; ++i, ++steps) {
      TransitionSample t;
      for (int j = 0; j < 6; ++j) t.state.push_back(uniform01(eng));
      for (int j = 0; j < 6; ++j) t.next_state.push_back(uniform01(eng));
      for (std::size_t n : groups) {
        for (std::size_t j = 0; j < n; ++j) t.action.push_back(1.0 / static_cast<double>(n));
      }
      t.reward = uniform(eng, 30.0, 40.0);
      MlpParams ea = ag.target_actor(), ec = ag.target_critic();
      const auto diag = ag.train_step(std::move(t));
      if (diag.updated) {
        soft_update(ea, ag.actor(), cfg.tau);
        soft_update(ec, ag.critic(), cfg.tau);
      }
      worst = std::max({worst, std::sqrt(ag.target_actor().squared_distance(ea)),
                        std::sqrt(ag.target_critic().squared_distance(ec))});
    }
  }
  std::ostringstream det;
  det << bad_actions << "/20000 actions off-simplex, " << bad_epochs << "/" << epochs
      << " epochs violate conservation, soft-update max dev " << fmt("%.2g", worst) << " over "
      << steps << " steps";
  return {bad_actions == 0 && bad_epochs == 0 && worst <= 1e-12, det.str()};
}

// 8 ------------------------------------------------------------------------

Outcome determinism(ExperimentConfig cfg) {
  cfg.epochs = 300;
  cfg.seeds = {4};
  cfg.eval_span = 100;
  cfg.arms = {Arm::kDrlTe, Arm::kDdpg, Arm::kSp, Arm::kLb, Arm::kNum};
  auto csvs = [&] {
    std::vector<std::string> out;
    for (const auto& r : run_experiment(cfg)) {
      std::ostringstream os;
      write_csv(os, r);
      out.push_back(os.str());
    }
    return out;
  };
  const auto a = csvs();
  const auto b = csvs();
  return {a == b, std::to_string(a.size()) + " runs of 300 epochs repeated byte-identically"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string config = DRLTE_SOURCE_DIR "/configs/nsfnet.json";
  std::vector<int> only;
  std::size_t static_epochs = 0;
  app.add_option("--config", config, "experiment config for criteria 5, 6 and 8");
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--static-epochs", static_epochs,
                 "epochs for the non-learning arms; 0 uses the config value");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg = load_experiment_config(config);
  apply_env_overrides(cfg);
  if (static_epochs == 0) static_epochs = cfg.epochs;
  if (static_epochs < cfg.eval_span) {
    std::cerr << "error: --static-epochs must cover the evaluation span\n";
    return 1;
  }
  auto selected = [&](int c) { return only.empty() || std::count(only.begin(), only.end(), c); };

  std::optional<Study> study;
  auto get_study = [&]() -> const Study& {
    if (!study) study = run_study(cfg, static_epochs);
    return *study;
  };

  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
    double time_limit_s;
  };
  const double kNoLimit = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria{
      {"gradient correctness", gradients, 10.0},
      {"sum-tree sampling fidelity", sum_tree, 30.0},
      {"simulator vs M/D/1 oracle", md1, 60.0},
      {"NUM solver optimality", num_optimality, 60.0},
      {"learning curve", [&] { return learning_curve(cfg, get_study()); }, kNoLimit},
      {"ranking", [&] { return ranking(cfg, get_study()); }, kNoLimit},
      {"invariant fuzz", fuzz, kNoLimit},
      {"determinism", [&] { return determinism(cfg); }, kNoLimit},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && secs > criteria[i].time_limit_s) {
      o = {false, o.detail + "; exceeded the " + fmt("%.0f", criteria[i].time_limit_s) + " s budget"};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].name
              << ", " << fmt("%.1f", secs) << " s): " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
