#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "udasa/preference.hpp"

namespace udasa {

struct CurriculumConfig {
  double tau1 = 0.4;
  double tau2 = 0.7;

  void validate() const;  // 0 <= tau1 < tau2 <= 1
};

// Generalized n-way split on delta_u. Thresholds must be strictly increasing
// values in [0,1]; k thresholds produce k+1 stages ordered largest-gap first:
// stage 1 holds delta_u > t_k, the last stage holds delta_u <= t_1, and each
// middle stage holds t_i < delta_u <= t_{i+1}. With no thresholds everything
// lands in one stage. Within a stage, pairs sort by descending delta_u, then
// prompt_id.
std::vector<std::vector<PreferencePair>> split_by_thresholds(
    const std::vector<PreferencePair>& pairs, const std::vector<double>& thresholds);

// The paper's three stages: conservative (delta_u > tau2), moderate
// (tau1 < delta_u <= tau2), exploratory (delta_u <= tau1).
struct StagePartition {
  std::vector<std::vector<PreferencePair>> stages;  // exactly 3
  CurriculumConfig config;
};

StagePartition partition(const std::vector<PreferencePair>& pairs,
                         const CurriculumConfig& config);

struct StageConfig {
  int stage_index = 1;
  double learning_rate = 0.0;
  int warmup_steps = 0;
  int max_steps = 0;
  int max_epochs = 1;
  int early_stop_patience = 3;
  double kl_coefficient = 0.0;
  int decay_window_steps = 1;  // terminal linear-decay window
};

struct PlanOptions {
  int batch_size = 8;
  int warmup_steps = 500;
  int step_cap = 3000;         // "1 epoch or 3000 steps"
  double lr_first_stage = 3e-6;
  double lr_later_stages = 5e-6;
  double kl_coefficient = 0.1;  // applied to the final stage only
  int early_stop_patience = 3;
  double decay_fraction = 0.1;  // fraction of max_steps spent in terminal decay
};

// Stage configs for an arbitrary stage count (sizes in stage order). An empty
// stage gets max_steps = 0 and is skippable. The final stage carries the KL
// coefficient when there are at least two stages.
std::vector<StageConfig> plan_stages(const std::vector<std::size_t>& stage_sizes,
                                     const PlanOptions& options);

// Three-stage plan per the default curriculum.
std::vector<StageConfig> default_stage_plan(const StagePartition& partition,
                                            const PlanOptions& options = {});

// Piecewise-linear schedule: ramp 0 -> lr over warmup_steps, constant
// mid-phase, linear decay to 0 across the final decay window. Requires
// 0 <= step < max_steps.
double learning_rate_at(int step, const StageConfig& config);

// stages/stage{1,2,3}.jsonl plus stages/plan.json under the run dir.
void write_partition(const std::filesystem::path& run_dir, const StagePartition& partition,
                     const std::vector<StageConfig>& plan);

struct LoadedPartition {
  std::vector<std::vector<PreferencePair>> stages;
  std::vector<StageConfig> plan;
  double tau1 = 0.0;
  double tau2 = 0.0;
};

// decay_fraction is not persisted in plan.json; the caller supplies the same
// value the plan was built with.
LoadedPartition load_partition(const std::filesystem::path& run_dir,
                               double decay_fraction = 0.1);

}  // namespace udasa
