#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../support/stats.hpp"
#include "drlte/errors.hpp"
#include "drlte/replay.hpp"
#include "drlte/rng.hpp"

using namespace drlte;

namespace {

TransitionSample sample(double r) { return {{r}, {1.0}, r, {r + 1.0}}; }

PrioritizedBuffer buffer_with(const std::vector<double>& priorities, double beta0) {
  ReplayConfig cfg;
  cfg.capacity = priorities.size();
  cfg.beta0 = beta0;
  PrioritizedBuffer buf(cfg);
  for (std::size_t i = 0; i < priorities.size(); ++i) buf.insert(sample(static_cast<double>(i)));
  for (std::size_t i = 0; i < priorities.size(); ++i) buf.update_priority(i, priorities[i]);
  return buf;
}

std::vector<std::size_t> draw_counts(const PrioritizedBuffer& buf, std::size_t draws,
                                     std::size_t batch, std::uint64_t seed) {
  Engine eng(seed);
  std::vector<std::size_t> counts(buf.size(), 0);
  for (std::size_t d = 0; d < draws; d += batch) {
    for (const auto& s : buf.sample_batch(batch, 0.4, eng)) ++counts[s.index];
  }
  return counts;
}

}  // namespace

TEST_CASE("sum tree keeps parent sums") {
  SumTree t(5);
  CHECK(t.leaf_count() == 8);
  Engine eng(1);
  double leaves[8] = {};
  for (int i = 0; i < 10000; ++i) {
    const std::size_t k = uniform_index(eng, 8);
    leaves[k] = uniform(eng, 0.0, 10.0);
    t.set(k, leaves[k]);
  }
  CHECK(t.audit() <= 1e-12);
  double scan = 0.0;
  for (double v : leaves) scan += v;
  CHECK(std::abs(t.total() - scan) <= 1e-9 * scan);
  CHECK_THROWS_AS(t.set(8, 1.0), InvariantError);
}

TEST_CASE("sum tree find locates prefix masses") {
  SumTree t(4);
  for (std::size_t i = 0; i < 4; ++i) t.set(i, static_cast<double>(i + 1));  // 1 2 3 4
  CHECK(t.find(0.0) == 0);
  CHECK(t.find(0.999) == 0);
  CHECK(t.find(1.0) == 1);
  CHECK(t.find(2.999) == 1);
  CHECK(t.find(3.0) == 2);
  CHECK(t.find(9.999) == 3);
  t.set(1, 0.0);
  CHECK(t.find(1.0) == 2);  // zero-mass leaf skipped
  t.set(3, 0.0);
  CHECK(t.find(3.9999) == 2);
}

TEST_CASE("operation counts grow with log capacity") {
  std::vector<double> per_op;
  for (std::size_t cap : {1u << 6, 1u << 10, 1u << 14}) {
    SumTree t(cap);
    for (std::size_t i = 0; i < cap; ++i) t.set(i, 1.0);
    const auto before = t.visits();
    for (std::size_t i = 0; i < 100; ++i) {
      t.set(i % 64, 2.0);
      (void)t.find(static_cast<double>(i));
    }
    per_op.push_back(static_cast<double>(t.visits() - before) / 200.0);
  }
  // set: log2 + 1 visits, find: log2 visits.
  CHECK(per_op[0] == doctest::Approx(6.5));
  CHECK(per_op[1] == doctest::Approx(10.5));
  CHECK(per_op[2] == doctest::Approx(14.5));
}

TEST_CASE("insert uses the running maximum priority") {
  ReplayConfig cfg;
  cfg.capacity = 8;
  PrioritizedBuffer buf(cfg);
  buf.insert(sample(0));
  CHECK(buf.priority(0) == 1.0);
  buf.update_priority(0, 0.2);
  buf.insert(sample(1));
  buf.update_priority(1, 5.0);
  buf.insert(sample(2));
  CHECK(buf.priority(2) == 5.0);
  buf.update_priority(1, 0.3);
  buf.insert(sample(3));
  CHECK(buf.priority(3) == 5.0);  // index 2 still holds 5
}

TEST_CASE("ring buffer overwrites the oldest sample") {
  ReplayConfig cfg;
  cfg.capacity = 2;
  PrioritizedBuffer buf(cfg);
  buf.insert(sample(10));
  buf.insert(sample(11));
  buf.insert(sample(12));
  CHECK(buf.size() == 2);
  CHECK(buf.at(0).reward == 12.0);
  CHECK(buf.at(1).reward == 11.0);
}

TEST_CASE("priority formula") {
  ReplayConfig cfg;
  std::vector<double> g{0.2, -0.2};
  CHECK(compute_priority(-0.5, g, cfg) == doctest::Approx(0.386).epsilon(1e-14));
  ReplayConfig td_only = cfg;
  td_only.phi = 1.0;
  CHECK(compute_priority(-0.5, g, td_only) == doctest::Approx(0.51).epsilon(1e-14));
  std::vector<double> zero{0.0, 0.0};
  CHECK(compute_priority(0.0, zero, cfg) == doctest::Approx(0.6 * 0.01).epsilon(1e-14));
  CHECK(compute_priority(0.0, zero, cfg) > 0.0);
  CHECK_THROWS_AS(compute_priority(NAN, g, cfg), DivergenceError);
  std::vector<double> bad{0.0, INFINITY};
  CHECK_THROWS_AS(compute_priority(0.1, bad, cfg), DivergenceError);
}

TEST_CASE("beta1 annealing") {
  ReplayConfig cfg;
  cfg.anneal_epochs = 1000;
  CHECK(anneal_beta1(cfg, 0) == 0.4);
  CHECK(anneal_beta1(cfg, 500) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(anneal_beta1(cfg, 1000) == 1.0);
  CHECK(anneal_beta1(cfg, 5000) == 1.0);
}

TEST_CASE("config validation") {
  ReplayConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta1_start = 0.0;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = {};
  c.xi = 0.0;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = {};
  c.phi = 1.5;
  CHECK_THROWS_AS(c.validate(), InvariantError);
  c = {};
  c.beta0 = -0.1;
  CHECK_THROWS_AS(PrioritizedBuffer{c}, InvariantError);
}

TEST_CASE("equal priorities sample uniformly with unit weights") {
  auto buf = buffer_with(std::vector<double>(8, 0.7), 0.6);
  Engine eng(3);
  for (int i = 0; i < 20; ++i) {
    for (const auto& s : buf.sample_batch(4, 0.4, eng)) {
      CHECK(s.is_weight == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(buf.probability(s.index) == doctest::Approx(1.0 / 8.0));
    }
  }
}

TEST_CASE("sampling frequencies follow p^beta0") {
  const std::vector<double> p{1.0, 2.0, 3.0, 4.0};
  SUBCASE("beta0 = 1") {
    auto buf = buffer_with(p, 1.0);
    CHECK(buf.probability(0) == doctest::Approx(0.1));
    CHECK(buf.probability(3) == doctest::Approx(0.4));
    auto chi = testing::chi_square(draw_counts(buf, 100000, 1, 5), {0.1, 0.2, 0.3, 0.4});
    CHECK(chi.p_value > 0.01);
  }
  SUBCASE("beta0 = 0 is uniform") {
    auto buf = buffer_with(p, 0.0);
    auto chi = testing::chi_square(draw_counts(buf, 100000, 1, 6), {0.25, 0.25, 0.25, 0.25});
    CHECK(chi.p_value > 0.01);
  }
  SUBCASE("after an update the frequency tracks the new value") {
    auto buf = buffer_with(p, 0.6);
    buf.update_priority(1, 9.0);
    std::vector<double> probs;
    double z = 0.0;
    for (double v : {1.0, 9.0, 3.0, 4.0}) z += std::pow(v, 0.6);
    for (double v : {1.0, 9.0, 3.0, 4.0}) probs.push_back(std::pow(v, 0.6) / z);
    for (std::size_t i = 0; i < 4; ++i) CHECK(buf.probability(i) == doctest::Approx(probs[i]));
    CHECK(testing::chi_square(draw_counts(buf, 100000, 1, 7), probs).p_value > 0.01);
  }
}

TEST_CASE("importance weights") {
  auto buf = buffer_with({0.5, 1.0, 4.0, 8.0, 0.1, 2.0, 3.0, 6.0}, 0.6);
  Engine eng(11);
  for (int i = 0; i < 200; ++i) {
    auto batch = buf.sample_batch(5, 0.4 + 0.003 * i, eng);
    double mx = 0.0;
    for (const auto& s : batch) {
      CHECK(s.is_weight > 0.0);
      CHECK(s.is_weight <= 1.0);
      mx = std::max(mx, s.is_weight);
    }
    CHECK(mx == 1.0);
    // Ratios follow (N P(i))^-beta1.
    const double beta1 = 0.4 + 0.003 * i;
    const auto& a = batch.front();
    for (const auto& s : batch) {
      const double expect = std::pow(buf.probability(s.index) / buf.probability(a.index), -beta1);
      CHECK(s.is_weight / a.is_weight == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("stratified sampling hits every sub-range") {
  // Equal priorities: draw i must come from leaves [2i, 2i+1].
  auto buf = buffer_with(std::vector<double>(8, 1.0), 1.0);
  Engine eng(2);
  for (int rep = 0; rep < 50; ++rep) {
    auto batch = buf.sample_batch(4, 1.0, eng);
    for (std::size_t i = 0; i < 4; ++i) CHECK(batch[i].index / 2 == i);
  }
}

TEST_CASE("sampling and update errors") {
  ReplayConfig cfg;
  cfg.capacity = 4;
  PrioritizedBuffer buf(cfg);
  Engine eng(1);
  buf.insert(sample(1));
  CHECK_THROWS_AS(buf.sample_batch(2, 0.4, eng), InvariantError);
  CHECK_THROWS_AS(buf.update_priority(1, 1.0), InvariantError);
  CHECK_THROWS_AS(buf.update_priority(0, 0.0), InvariantError);
  CHECK_THROWS_AS(buf.update_priority(0, -1.0), InvariantError);
  buf.update_priority(0, 0.123);
  CHECK(buf.priority(0) == 0.123);
}

TEST_CASE("random interleavings keep the tree consistent") {
  ReplayConfig cfg;
  cfg.capacity = 13;  // rounds up to 16 leaves
  PrioritizedBuffer buf(cfg);
  Engine eng(9);
  for (int i = 0; i < 5000; ++i) {
    if (buf.size() == 0 || uniform01(eng) < 0.3) {
      buf.insert(sample(i));
    } else {
      buf.update_priority(uniform_index(eng, buf.size()),
                          compute_priority(uniform(eng, -3, 3), std::vector<double>{uniform(eng, -1, 1)}, cfg));
    }
    CHECK(buf.tree().audit() <= 1e-9);
  }
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(buf.priority(i) >= cfg.phi * cfg.xi);
  double scan = 0.0;
  for (std::size_t i = 0; i < buf.tree().leaf_count(); ++i) scan += buf.tree().leaf(i);
  CHECK(std::abs(buf.tree().total() - scan) <= 1e-9 * scan);
}
