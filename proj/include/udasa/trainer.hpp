#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "udasa/curriculum.hpp"
#include "udasa/dpo.hpp"
#include "udasa/policy.hpp"

namespace udasa {

struct TrainerConfig {
  double beta = 0.1;
  int batch_size = 8;
  double eval_fraction = 0.1;
  std::uint64_t seed = 0;
  int eval_interval = 10;  // steps between eval-set evaluations
  bool refreeze_per_stage = false;

  void validate() const;
};

enum class StopReason { cap, early_stop, empty };

std::string to_string(StopReason reason);

struct StepRecord {
  int stage = 0;
  int step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> eval_loss;
  std::optional<double> pref_acc;
  std::optional<double> kl;
  std::optional<double> margin;
};

struct StageMetrics {
  int stage_index = 0;
  int steps_run = 0;
  StopReason stop_reason = StopReason::empty;
  std::vector<StepRecord> trace;
};

// One curriculum stage of plain gradient descent on the DPO loss (plus
// kl_coefficient * KL over the batch prompts when configured), following the
// stage's learning-rate schedule. A seeded eval_fraction hold-out of the
// stage's pairs drives early stopping: stop once the eval loss has failed to
// improve by at least 1e-4 for early_stop_patience consecutive evaluations.
StageMetrics train_stage(ToyPolicy& policy, const ToyPolicy& reference,
                         const std::vector<PreferencePair>& stage_pairs,
                         const StageConfig& stage_config, const TrainerConfig& trainer_config);

struct CurriculumRunResult {
  std::vector<StageMetrics> metrics;
  ToyPolicy reference;  // frozen at curriculum start
};

// Stages run strictly in plan order. The reference policy is frozen once at
// curriculum start (or re-frozen per stage when configured). Throws when all
// stages are empty.
CurriculumRunResult run_curriculum(ToyPolicy& policy,
                                   const std::vector<std::vector<PreferencePair>>& stages,
                                   const std::vector<StageConfig>& plan,
                                   const TrainerConfig& trainer_config);

// metrics.jsonl: one {"stage","step","lr","train_loss",...} record per step,
// optional fields present only on evaluation steps.
void write_metrics(const std::filesystem::path& path, const std::vector<StageMetrics>& metrics);

// Writes stage{i}_dpo.jsonl ({"prompt","chosen","rejected"} with full texts
// resolved from the run dir) for every stage. When command_template is set it
// is invoked once per stage in order with {stage}, {file}, {lr}, {max_steps}
// and {kl} substituted; a non-zero exit aborts the remaining stages.
void export_stage_datasets(const std::filesystem::path& run_dir,
                           const std::vector<std::vector<PreferencePair>>& stages,
                           const std::vector<StageConfig>& plan,
                           const std::optional<std::string>& command_template);

}  // namespace udasa
