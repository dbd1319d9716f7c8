#include <benchmark/benchmark.h>

#include <vector>

#include "drlte/batch_kernels.hpp"
#include "drlte/harness.hpp"
#include "drlte/nn.hpp"
#include "drlte/rng.hpp"

using namespace drlte;

namespace {

// NSFNET-sized agent: 20 sessions, 3 paths each.
struct KernelFixture {
  std::vector<std::size_t> groups = std::vector<std::size_t>(20, 3);
  MlpParams actor = init_params(standard_shape(40, 60, OutputMode::kGroupedSoftmax, groups), 1);
  MlpParams critic = init_params(standard_shape(100, 1), 2);
  MlpParams target_actor = actor;
  MlpParams target_critic = critic;
  std::vector<TransitionSample> samples;
  std::vector<BatchItem> items;

  explicit KernelFixture(std::size_t batch) {
    Engine eng(3);
    samples.resize(batch);
    for (auto& t : samples) {
      for (int i = 0; i < 40; ++i) t.state.push_back(uniform01(eng));
      for (int i = 0; i < 40; ++i) t.next_state.push_back(uniform01(eng));
      for (int i = 0; i < 60; ++i) t.action.push_back(1.0 / 3.0);
      t.reward = uniform(eng, 30.0, 40.0);
    }
    for (const auto& t : samples) items.push_back({&t, uniform(eng, 0.2, 1.0)});
  }
  NetworkSet nets() const { return {actor, critic, target_actor, target_critic}; }
};

void BM_BatchSerial(benchmark::State& state) {
  KernelFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = accumulate_batch_serial(f.nets(), f.items, 0.99);
    benchmark::DoNotOptimize(r.critic_loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  KernelFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto r = accumulate_batch_parallel(f.nets(), f.items, 0.99);
    benchmark::DoNotOptimize(r.critic_loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_BatchSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_BatchParallel)->Arg(64)->Arg(256);

// Run-level parallelism: static arms over several seeds.
ExperimentConfig sweep_config() {
  ExperimentConfig cfg;
  cfg.topology.file = DRLTE_DATA_DIR "/topologies/nsfnet.json";
  cfg.arms = {Arm::kSp, Arm::kLb, Arm::kNum};
  cfg.seeds = {1, 2, 3, 4};
  cfg.epochs = 20;
  cfg.eval_span = 10;
  return cfg;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto cfg = sweep_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg).size());
}

void BM_SweepParallel(benchmark::State& state) {
  const auto cfg = sweep_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg).size());
}

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
