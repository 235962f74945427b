#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "udasa/curriculum.hpp"
#include "udasa/pipeline.hpp"
#include "udasa/preference.hpp"
#include "udasa/trainer.hpp"

namespace udasa {

struct SyntheticSpec {
  int num_prompts = 200;
  int candidates_per_prompt = 5;
  double quality_gap = 0.6;  // width of the latent quality band
  double noise_sigma = 0.0;  // observation noise on u_total
  std::uint64_t seed = 0;

  void validate() const;
};

// Scored responses with known ground truth. Latent qualities are fixed by the
// seed; the observed u_total is clamp(latent + noise, 0, 1), and the stored
// component scores are back-filled so fuse() reproduces the observed total
// within 1e-9 (u_sem stays group-level constant; u_fact = u_align solve a 1-D
// root-find). Infeasible observations are resampled, failing after 100
// attempts.
struct SyntheticData {
  std::vector<Prompt> prompts;
  std::vector<ScoredResponse> responses;
  std::vector<std::vector<double>> latents;  // per prompt, per candidate
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Solves fuse(u_sem, t, t).u_total == target for t in [0,1]; throws
// InvalidInput when the target is outside the attainable range.
double solve_fused_components(double u_sem, double target);

// Persists the dataset as a normal scored run (manifest, prompts.jsonl,
// responses.jsonl) so downstream commands treat it like provider output.
void write_synthetic_run(const std::filesystem::path& run_dir, const SyntheticData& data,
                         const SyntheticSpec& spec);

// Evaluation pairs: same argmin-chosen rule, rejected re-drawn with an
// independent seed. They are preference comparisons never used for training,
// over the same prompt groups — the only hold-out a tabular policy can
// transfer to.
std::vector<PreferencePair> build_eval_pairs(const std::vector<std::vector<ScoredResponse>>& groups,
                                             std::uint64_t seed);

struct CellResult {
  double accuracy = 0.0;
  double eval_loss = 0.0;
  long steps_total = 0;
};

// Full pipeline for one threshold setting: split -> plan -> curriculum on a
// fresh uniform policy -> held-out accuracy/loss.
CellResult run_cell(const std::vector<std::vector<ScoredResponse>>& groups,
                    const std::vector<PreferencePair>& pairs,
                    const std::vector<PreferencePair>& eval_pairs,
                    const std::vector<double>& thresholds, const TrainerConfig& trainer_config,
                    const PlanOptions& plan_options);

struct SweepCell {
  double tau1 = 0.0;
  double tau2 = 0.0;
  CellResult result;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // only tau1 < tau2, ordered by (tau1, tau2)
};

// Threshold sensitivity sweep. Data, pairs and seeds are shared across cells,
// so cells differ only through the partitioning.
SweepResult sweep_thresholds(const std::vector<double>& tau1_values,
                             const std::vector<double>& tau2_values, const SyntheticData& data,
                             const TrainerConfig& trainer_config,
                             const PlanOptions& plan_options);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);

enum class AblationVariant { one, two, three, four };

AblationVariant ablation_variant_from_string(const std::string& name);

// Stage-count variants: one-stage = no split; two-stage = single cutoff 0.6;
// three-stage = (0.3, 0.6); four-stage = (0.2, 0.5, 0.8).
std::vector<double> ablation_thresholds(AblationVariant variant);

struct AblationRow {
  std::string variant;
  CellResult result;
  std::vector<StageMetrics> metrics;
};

AblationRow ablate_stage_count(AblationVariant variant, const SyntheticData& data,
                               const TrainerConfig& trainer_config,
                               const PlanOptions& plan_options);

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace udasa
