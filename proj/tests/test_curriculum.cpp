#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "udasa/curriculum.hpp"
#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

using namespace udasa;

namespace {

PreferencePair pair_with(const std::string& prompt_id, double delta_u) {
  PreferencePair p;
  p.prompt_id = prompt_id;
  p.chosen_id = "a";
  p.rejected_id = "b";
  p.chosen_u = 0.0;
  p.rejected_u = delta_u;
  p.delta_u = delta_u;
  return p;
}

std::vector<PreferencePair> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::vector<PreferencePair> pairs;
  for (std::size_t i = 0; i < n; ++i)
    pairs.push_back(pair_with("q" + std::to_string(i), uniform_double(rng)));
  return pairs;
}

// Independent oracle: three explicit filters.
std::array<std::vector<std::string>, 3> brute_force_3way(const std::vector<PreferencePair>& pairs,
                                                         double tau1, double tau2) {
  std::array<std::vector<std::string>, 3> out;
  for (const auto& p : pairs) {
    if (p.delta_u > tau2) out[0].push_back(p.prompt_id);
    else if (p.delta_u > tau1) out[1].push_back(p.prompt_id);
    else out[2].push_back(p.prompt_id);
  }
  for (auto& ids : out) std::sort(ids.begin(), ids.end());
  return out;
}

std::array<std::vector<std::string>, 3> ids_of(const StagePartition& part) {
  std::array<std::vector<std::string>, 3> out;
  for (int s = 0; s < 3; ++s) {
    for (const auto& p : part.stages[s]) out[s].push_back(p.prompt_id);
    std::sort(out[s].begin(), out[s].end());
  }
  return out;
}

}  // namespace

TEST_CASE("partition: the paper's worked example at (0.4, 0.7)") {
  const std::vector<PreferencePair> pairs = {pair_with("x", 0.75), pair_with("y", 0.5),
                                             pair_with("z", 0.2)};
  const auto part = partition(pairs, CurriculumConfig{0.4, 0.7});
  REQUIRE(part.stages.size() == 3);
  REQUIRE(part.stages[0].size() == 1);
  CHECK(part.stages[0][0].prompt_id == "x");
  REQUIRE(part.stages[1].size() == 1);
  CHECK(part.stages[1][0].prompt_id == "y");
  REQUIRE(part.stages[2].size() == 1);
  CHECK(part.stages[2][0].prompt_id == "z");
}

TEST_CASE("partition: boundary values use strict > for stage 1 and <= for stage 3") {
  const auto part = partition({pair_with("at-tau2", 0.7), pair_with("at-tau1", 0.4)},
                              CurriculumConfig{0.4, 0.7});
  CHECK(part.stages[0].empty());
  REQUIRE(part.stages[1].size() == 1);
  CHECK(part.stages[1][0].prompt_id == "at-tau2");
  REQUIRE(part.stages[2].size() == 1);
  CHECK(part.stages[2][0].prompt_id == "at-tau1");
}

TEST_CASE("partition: invalid thresholds rejected") {
  CHECK_THROWS_AS(partition({}, CurriculumConfig{0.7, 0.4}), InvalidInput);
  CHECK_THROWS_AS(partition({}, CurriculumConfig{0.4, 0.4}), InvalidInput);
  CHECK_THROWS_AS(partition({}, CurriculumConfig{-0.1, 0.4}), InvalidInput);
  CHECK_THROWS_AS(partition({}, CurriculumConfig{0.4, 1.1}), InvalidInput);
}

TEST_CASE("partition: equals the brute-force three-way filter on random data") {
  std::mt19937_64 rng(77);
  const auto pairs = random_pairs(rng, 10000);
  const auto part = partition(pairs, CurriculumConfig{0.4, 0.7});
  const auto expected = brute_force_3way(pairs, 0.4, 0.7);
  CHECK(ids_of(part) == expected);
}

TEST_CASE("partition: completeness and disjointness on random thresholds") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pairs = random_pairs(rng, 200);
    double t1 = uniform_double(rng), t2 = uniform_double(rng);
    if (t1 > t2) std::swap(t1, t2);
    if (t1 == t2) t2 = std::min(1.0, t2 + 0.01);
    const auto part = partition(pairs, CurriculumConfig{t1, t2});
    std::multiset<std::string> seen;
    std::size_t total = 0;
    for (const auto& stage : part.stages) {
      total += stage.size();
      for (const auto& p : stage) seen.insert(p.prompt_id);
    }
    CHECK(total == pairs.size());
    CHECK(seen.size() == pairs.size());  // ids unique per pair -> no duplication
  }
}

TEST_CASE("partition: within-stage order is descending delta_u then prompt_id") {
  std::mt19937_64 rng(5);
  const auto pairs = random_pairs(rng, 300);
  const auto part = partition(pairs, CurriculumConfig{0.3, 0.6});
  for (const auto& stage : part.stages) {
    for (std::size_t i = 1; i < stage.size(); ++i) {
      const bool ordered = stage[i - 1].delta_u > stage[i].delta_u ||
                           (stage[i - 1].delta_u == stage[i].delta_u &&
                            stage[i - 1].prompt_id < stage[i].prompt_id);
      CHECK(ordered);
    }
  }
}

TEST_CASE("changing thresholds only moves pairs between stages") {
  std::mt19937_64 rng(9);
  const auto pairs = random_pairs(rng, 500);
  auto collect = [](const StagePartition& part) {
    std::multiset<std::string> ids;
    for (const auto& stage : part.stages)
      for (const auto& p : stage) ids.insert(p.prompt_id);
    return ids;
  };
  const auto a = collect(partition(pairs, CurriculumConfig{0.2, 0.5}));
  const auto b = collect(partition(pairs, CurriculumConfig{0.4, 0.7}));
  CHECK(a == b);
}

TEST_CASE("split_by_thresholds: generalized splitter and boundary convention") {
  const std::vector<PreferencePair> pairs = {pair_with("half", 0.5)};
  const auto stages = split_by_thresholds(pairs, {0.2, 0.5, 0.8});
  REQUIRE(stages.size() == 4);
  CHECK(stages[0].empty());                 // > 0.8
  CHECK(stages[1].empty());                 // (0.5, 0.8]
  REQUIRE(stages[2].size() == 1);           // (0.2, 0.5] <- 0.5 lands in the lower bucket
  CHECK(stages[2][0].prompt_id == "half");
  CHECK(stages[3].empty());

  const auto one = split_by_thresholds(pairs, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 1);

  CHECK_THROWS_AS(split_by_thresholds(pairs, {0.5, 0.5}), InvalidInput);
  CHECK_THROWS_AS(split_by_thresholds(pairs, {0.8, 0.2}), InvalidInput);
  CHECK_THROWS_AS(split_by_thresholds(pairs, {1.5}), InvalidInput);
}

TEST_CASE("default plan: learning rates, warmup, caps, kl switch") {
  StagePartition part;
  part.config = CurriculumConfig{0.4, 0.7};
  part.stages.resize(3);
  for (int i = 0; i < 1000; ++i) part.stages[0].push_back(pair_with("a" + std::to_string(i), 0.8));
  for (int i = 0; i < 100000; ++i)
    part.stages[1].push_back(pair_with("b" + std::to_string(i), 0.5));
  // stage 3 left empty

  const auto plan = default_stage_plan(part);
  REQUIRE(plan.size() == 3);
  CHECK(plan[0].stage_index == 1);
  CHECK(plan[0].learning_rate == 3e-6);
  CHECK(plan[1].learning_rate == 5e-6);
  CHECK(plan[2].learning_rate == 5e-6);
  for (const auto& s : plan) {
    CHECK(s.warmup_steps == 500);
    CHECK(s.early_stop_patience == 3);
    CHECK(s.max_epochs == 1);
  }
  CHECK(plan[0].max_steps == 125);   // ceil(1000/8)
  CHECK(plan[1].max_steps == 3000);  // capped
  CHECK(plan[2].max_steps == 0);     // empty stage -> skippable
  CHECK(plan[0].kl_coefficient == 0.0);
  CHECK(plan[1].kl_coefficient == 0.0);
  CHECK(plan[2].kl_coefficient == 0.1);
}

TEST_CASE("learning_rate_at: ramp, plateau, terminal decay") {
  StageConfig cfg;
  cfg.learning_rate = 3e-6;
  cfg.warmup_steps = 500;
  cfg.max_steps = 3000;
  cfg.decay_window_steps = 300;

  CHECK(learning_rate_at(0, cfg) == 0.0);
  CHECK(learning_rate_at(250, cfg) == doctest::Approx(1.5e-6).epsilon(1e-12));
  CHECK(learning_rate_at(500, cfg) == doctest::Approx(3e-6).epsilon(1e-12));
  CHECK(learning_rate_at(1500, cfg) == 3e-6);
  CHECK(learning_rate_at(2699, cfg) == 3e-6);
  // last step of the 300-step decay window
  CHECK(learning_rate_at(2999, cfg) == doctest::Approx(3e-6 / 300.0).epsilon(1e-12));

  CHECK_THROWS_AS(learning_rate_at(-1, cfg), InvalidInput);
  CHECK_THROWS_AS(learning_rate_at(3000, cfg), InvalidInput);
}

TEST_CASE("learning_rate_at: continuous and non-negative across a full stage") {
  StageConfig cfg;
  cfg.learning_rate = 5e-6;
  cfg.warmup_steps = 500;
  cfg.max_steps = 3000;
  cfg.decay_window_steps = 300;
  const double bound =
      cfg.learning_rate / std::min(cfg.warmup_steps, cfg.decay_window_steps) + 1e-15;
  double prev = learning_rate_at(0, cfg);
  CHECK(prev >= 0.0);
  for (int step = 1; step < cfg.max_steps; ++step) {
    const double lr = learning_rate_at(step, cfg);
    CHECK(lr >= 0.0);
    CHECK(std::abs(lr - prev) <= bound);
    prev = lr;
  }
}

TEST_CASE("learning_rate_at: short stages where warmup exceeds the cap") {
  StageConfig cfg;
  cfg.learning_rate = 5e-6;
  cfg.warmup_steps = 500;
  cfg.max_steps = 13;
  cfg.decay_window_steps = 1;
  for (int step = 0; step < cfg.max_steps; ++step) {
    CHECK(learning_rate_at(step, cfg) >= 0.0);
    CHECK(learning_rate_at(step, cfg) <= cfg.learning_rate);
  }
  CHECK(learning_rate_at(1, cfg) > 0.0);
}

TEST_CASE("plan ordering contract: stages listed 1, 2, 3") {
  StagePartition part;
  part.config = CurriculumConfig{0.4, 0.7};
  part.stages.resize(3);
  part.stages[0].push_back(pair_with("a", 0.9));
  part.stages[1].push_back(pair_with("b", 0.5));
  part.stages[2].push_back(pair_with("c", 0.1));
  const auto plan = default_stage_plan(part);
  for (std::size_t i = 0; i < plan.size(); ++i)
    CHECK(plan[i].stage_index == static_cast<int>(i + 1));
}
