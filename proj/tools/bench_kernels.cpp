// Serial vs OpenMP timings for the numeric kernels. Throughput differences
// only; both paths produce bit-identical values (see the equivalence tests).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "udasa/dpo.hpp"
#include "udasa/experiments.hpp"
#include "udasa/rng.hpp"
#include "udasa/uncertainty.hpp"

namespace {

using namespace udasa;

std::vector<EmbeddingVector> random_group(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<EmbeddingVector> group(n);
  for (auto& e : group) {
    e.values.resize(dim);
    for (auto& v : e.values) v = 2.0 * uniform_double(rng) - 1.0;
  }
  return group;
}

void BM_semantic_serial(benchmark::State& state) {
  const auto group = random_group(static_cast<std::size_t>(state.range(0)), 384, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(semantic_uncertainty_serial(group));
  }
}

void BM_semantic_omp(benchmark::State& state) {
  const auto group = random_group(static_cast<std::size_t>(state.range(0)), 384, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(semantic_uncertainty(group));
  }
}

struct DpoFixture {
  ToyPolicy policy;
  ToyPolicy reference;
  std::vector<PreferencePair> batch;
};

DpoFixture make_dpo_fixture(int num_prompts) {
  SyntheticSpec spec;
  spec.num_prompts = num_prompts;
  spec.candidates_per_prompt = 5;
  spec.seed = 7;
  const auto data = generate_synthetic(spec);
  const auto groups = group_by_prompt(data.responses);

  DpoFixture f;
  f.policy = ToyPolicy::uniform_from_groups(groups);
  std::mt19937_64 rng(11);
  for (auto& row : f.policy.logits()) {
    for (auto& v : row) v = uniform_double(rng) - 0.5;
  }
  f.reference = ToyPolicy::uniform_from_groups(groups);
  f.batch = build_pairs_from_groups(groups, 7).pairs;
  return f;
}

void BM_dpo_serial(benchmark::State& state) {
  const auto f = make_dpo_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpo_loss_serial(f.policy, f.reference, f.batch, 0.1));
  }
}

void BM_dpo_omp(benchmark::State& state) {
  const auto f = make_dpo_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpo_loss(f.policy, f.reference, f.batch, 0.1));
  }
}

void BM_kl_serial(benchmark::State& state) {
  const auto f = make_dpo_fixture(static_cast<int>(state.range(0)));
  std::vector<std::size_t> prompts(f.policy.num_prompts());
  for (std::size_t i = 0; i < prompts.size(); ++i) prompts[i] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_penalty_serial(f.policy, f.reference, prompts));
  }
}

void BM_kl_omp(benchmark::State& state) {
  const auto f = make_dpo_fixture(static_cast<int>(state.range(0)));
  std::vector<std::size_t> prompts(f.policy.num_prompts());
  for (std::size_t i = 0; i < prompts.size(); ++i) prompts[i] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_penalty(f.policy, f.reference, prompts));
  }
}

}  // namespace

BENCHMARK(BM_semantic_serial)->Arg(64)->Arg(256);
BENCHMARK(BM_semantic_omp)->Arg(64)->Arg(256);
BENCHMARK(BM_dpo_serial)->Arg(512)->Arg(4096);
BENCHMARK(BM_dpo_omp)->Arg(512)->Arg(4096);
BENCHMARK(BM_kl_serial)->Arg(4096);
BENCHMARK(BM_kl_omp)->Arg(4096);

BENCHMARK_MAIN();
