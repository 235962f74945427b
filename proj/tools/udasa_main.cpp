// udasa: uncertainty-driven self-alignment data pipeline.
//
// Subcommands: score, pairs, partition, train, run, sweep, ablate, export.
// Exit codes: 0 success, 1 runtime failure, 2 config/usage error.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "udasa/errors.hpp"
#include "udasa/experiments.hpp"
#include "udasa/pipeline.hpp"
#include "udasa/preference.hpp"
#include "udasa/run_config.hpp"
#include "udasa/trainer.hpp"

namespace fs = std::filesystem;
using namespace udasa;

namespace {

// The CLI process owns the run directory while a command executes.
class RunDirLock {
public:
  explicit RunDirLock(const fs::path& run_dir) {
    fs::create_directories(run_dir);
    path_ = run_dir / ".lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error("run dir " + run_dir.string() +
                  " is locked by another process (remove " + path_.string() + " if stale)");
  }
  ~RunDirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  RunDirLock(const RunDirLock&) = delete;
  RunDirLock& operator=(const RunDirLock&) = delete;

private:
  fs::path path_;
  int fd_ = -1;
};

struct GlobalFlags {
  std::string config_path;
  std::string run_dir_override;
  std::optional<std::int64_t> seed_override;
  bool mock_providers_flag = false;
  bool force = false;
};

RunConfig resolve_config(const GlobalFlags& flags, bool config_required = true) {
  RunConfig cfg;
  if (!flags.config_path.empty()) {
    if (!fs::exists(flags.config_path))
      throw ConfigError("config file not found: " + flags.config_path);
    cfg = load_run_config(flags.config_path);
  } else if (config_required && flags.run_dir_override.empty()) {
    throw ConfigError("no --config given and no --run-dir to fall back on");
  }
  if (!flags.run_dir_override.empty()) cfg.run_dir = flags.run_dir_override;
  if (flags.seed_override) cfg.seed = static_cast<std::uint64_t>(*flags.seed_override);
  if (flags.mock_providers_flag) cfg.mock_providers = true;
  if (cfg.run_dir.empty()) throw ConfigError("run_dir is not set (config key or --run-dir)");
  cfg.validate();
  return cfg;
}

void print_banner(const std::string& command, const RunConfig& cfg) {
  std::printf("[%s] run_dir=%s seed=%llu config_hash=%s\n", command.c_str(),
              cfg.run_dir.string().c_str(), static_cast<unsigned long long>(cfg.seed),
              cfg.config_hash().c_str());
}

void require_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw Error("missing prerequisite artifact: " + path.string());
}

std::vector<double> parse_tau_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad threshold value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty threshold list");
  return out;
}

int do_score(const RunConfig& cfg, const std::string& prompts_path, bool retry_failed,
             bool force) {
  RunDirLock lock(cfg.run_dir);
  const auto prompts = ingest_prompts(prompts_path);
  const auto providers = make_providers(cfg);
  write_or_check_manifest(cfg.run_dir, cfg.seed, cfg.n_responses, providers, force);

  ScoringConfig scoring;
  scoring.n_responses = cfg.n_responses;
  scoring.temperature = cfg.temperature;
  scoring.workers = cfg.workers;
  scoring.retry_failed = retry_failed;
  const auto summary = run_scoring(cfg.run_dir, prompts, providers, scoring, cfg.seed);

  std::printf("scored %zu prompts (%zu records), %zu already done, %zu failed, %zu skipped\n",
              summary.scored, summary.new_records, summary.already_scored, summary.failed,
              summary.skipped_failed);
  if (summary.scored == 0 && summary.failed > 0) {
    std::fprintf(stderr, "error: every attempted prompt failed; see %s\n",
                 (cfg.run_dir / "errors.jsonl").string().c_str());
    return 1;
  }
  return 0;
}

int do_pairs(const RunConfig& cfg) {
  RunDirLock lock(cfg.run_dir);
  require_artifact(cfg.run_dir / "responses.jsonl");
  const auto result = build_pairs(cfg.run_dir, cfg.seed, cfg.pairs);
  std::printf("built %zu pairs, skipped %zu prompts\n", result.pairs.size(),
              result.skips.size());
  return 0;
}

int do_partition(const RunConfig& cfg) {
  RunDirLock lock(cfg.run_dir);
  require_artifact(cfg.run_dir / "pairs.jsonl");
  std::vector<PreferencePair> pairs;
  for (const auto& rec : jsonl::load(cfg.run_dir / "pairs.jsonl"))
    pairs.push_back(pair_from_record(rec));
  const auto part = partition(pairs, cfg.curriculum);
  const auto plan = default_stage_plan(part, cfg.plan);
  write_partition(cfg.run_dir, part, plan);
  for (std::size_t i = 0; i < part.stages.size(); ++i) {
    std::printf("stage %zu: %zu pairs, max_steps %d%s\n", i + 1, part.stages[i].size(),
                plan[i].max_steps, part.stages[i].empty() ? " (skippable)" : "");
  }
  return 0;
}

int do_train(const RunConfig& cfg) {
  RunDirLock lock(cfg.run_dir);
  require_artifact(cfg.run_dir / "stages" / "plan.json");
  require_artifact(cfg.run_dir / "responses.jsonl");
  const auto loaded = load_partition(cfg.run_dir, cfg.plan.decay_fraction);

  const auto groups = group_by_prompt(load_scored_responses(cfg.run_dir));
  ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);

  TrainerConfig trainer = cfg.trainer;
  trainer.seed = cfg.seed;
  const auto result = run_curriculum(policy, loaded.stages, loaded.plan, trainer);

  write_metrics(cfg.run_dir / "metrics.jsonl", result.metrics);
  policy.save(cfg.run_dir / "policy.txt");
  for (const auto& m : result.metrics) {
    std::printf("stage %d: %d steps, stop=%s\n", m.stage_index, m.steps_run,
                to_string(m.stop_reason).c_str());
  }
  return 0;
}

int do_export(const RunConfig& cfg) {
  RunDirLock lock(cfg.run_dir);
  require_artifact(cfg.run_dir / "stages" / "plan.json");
  require_artifact(cfg.run_dir / "responses.jsonl");
  require_artifact(cfg.run_dir / "prompts.jsonl");
  const auto loaded = load_partition(cfg.run_dir, cfg.plan.decay_fraction);
  export_stage_datasets(cfg.run_dir, loaded.stages, loaded.plan, cfg.external_command);
  std::printf("exported %zu stage datasets%s\n", loaded.stages.size(),
              cfg.external_command ? " and invoked the external trainer" : "");
  return 0;
}

int do_run(const RunConfig& cfg, const std::string& prompts_path, bool retry_failed,
           bool force) {
  const int score_rc = do_score(cfg, prompts_path, retry_failed, force);
  if (score_rc != 0) return score_rc;
  if (const int rc = do_pairs(cfg); rc != 0) return rc;
  if (const int rc = do_partition(cfg); rc != 0) return rc;
  return cfg.external_command ? do_export(cfg) : do_train(cfg);
}

struct SyntheticFlags {
  int num_prompts = 200;
  int candidates = 5;
  double quality_gap = 0.6;
  double noise_sigma = 0.0;
  std::string from_run;
};

SyntheticData resolve_experiment_data(const RunConfig& cfg, const SyntheticFlags& flags) {
  SyntheticData data;
  if (!flags.from_run.empty()) {
    const fs::path source(flags.from_run);
    require_artifact(source / "responses.jsonl");
    data.responses = load_scored_responses(source);
    if (fs::exists(source / "prompts.jsonl")) {
      for (const auto& rec : jsonl::load(source / "prompts.jsonl"))
        data.prompts.push_back(
            {rec.at("id").get<std::string>(), rec.at("text").get<std::string>()});
    }
    return data;
  }
  SyntheticSpec spec;
  spec.num_prompts = flags.num_prompts;
  spec.candidates_per_prompt = flags.candidates;
  spec.quality_gap = flags.quality_gap;
  spec.noise_sigma = flags.noise_sigma;
  spec.seed = cfg.seed;
  return generate_synthetic(spec);
}

int do_sweep(const RunConfig& cfg, const SyntheticFlags& synth, const std::string& tau1_csv,
             const std::string& tau2_csv) {
  RunDirLock lock(cfg.run_dir);
  const auto data = resolve_experiment_data(cfg, synth);
  TrainerConfig trainer = cfg.trainer;
  trainer.seed = cfg.seed;
  const auto result = sweep_thresholds(parse_tau_list(tau1_csv), parse_tau_list(tau2_csv), data,
                                       trainer, cfg.plan);
  write_sweep_csv(cfg.run_dir / "sweep.csv", result);
  std::printf("sweep complete: %zu cells -> %s\n", result.cells.size(),
              (cfg.run_dir / "sweep.csv").string().c_str());
  return 0;
}

int do_ablate(const RunConfig& cfg, const SyntheticFlags& synth, const std::string& variant) {
  RunDirLock lock(cfg.run_dir);
  const auto data = resolve_experiment_data(cfg, synth);
  TrainerConfig trainer = cfg.trainer;
  trainer.seed = cfg.seed;

  std::vector<std::string> names;
  if (variant == "all") names = {"one", "two", "three", "four"};
  else names = {variant};

  std::vector<AblationRow> rows;
  for (const auto& name : names) {
    rows.push_back(
        ablate_stage_count(ablation_variant_from_string(name), data, trainer, cfg.plan));
    std::printf("variant %s: accuracy %.4f, eval_loss %.6f, steps %ld\n",
                rows.back().variant.c_str(), rows.back().result.accuracy,
                rows.back().result.eval_loss, rows.back().result.steps_total);
  }
  write_ablation_csv(cfg.run_dir / "ablation.csv", rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UDASA: uncertainty-driven adaptive self-alignment pipeline"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "Run config JSON file");
  app.add_option("--run-dir", flags.run_dir_override, "Run directory (overrides config)");
  app.add_option("--seed", flags.seed_override, "Seed (overrides config)");
  app.add_flag("--mock-providers", flags.mock_providers_flag,
               "Use deterministic in-process providers");
  app.add_flag("--force", flags.force, "Allow overwriting a run dir created with other settings");

  std::string prompts_path;
  bool retry_failed = false;
  auto* score = app.add_subcommand("score", "Sample and uncertainty-score responses (stage 1)");
  score->add_option("--prompts", prompts_path, "Prompt file (.jsonl with {id,text}, else plain text)")
      ->required();
  score->add_flag("--retry-failed", retry_failed, "Retry prompts recorded in errors.jsonl");

  auto* pairs_cmd = app.add_subcommand("pairs", "Build preference pairs (stage 2)");
  auto* partition_cmd =
      app.add_subcommand("partition", "Partition pairs into curriculum stages (stage 3)");
  auto* train_cmd = app.add_subcommand("train", "Run phased DPO training on the toy policy");
  auto* export_cmd =
      app.add_subcommand("export", "Export stage datasets (and drive an external trainer)");

  auto* run_cmd = app.add_subcommand("run", "Full pipeline: score, pairs, partition, train/export");
  run_cmd->add_option("--prompts", prompts_path, "Prompt file")->required();
  run_cmd->add_flag("--retry-failed", retry_failed, "Retry prompts recorded in errors.jsonl");

  SyntheticFlags synth;
  std::string tau1_csv = "0.2,0.3,0.4,0.5,0.6,0.7,0.8";
  std::string tau2_csv = "0.2,0.3,0.4,0.5,0.6,0.7,0.8";
  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sensitivity sweep on synthetic data");
  sweep_cmd->add_option("--tau1", tau1_csv, "Comma-separated tau1 grid values");
  sweep_cmd->add_option("--tau2", tau2_csv, "Comma-separated tau2 grid values");

  std::string variant = "all";
  auto* ablate_cmd = app.add_subcommand("ablate", "Stage-count ablation on synthetic data");
  ablate_cmd->add_option("--variant", variant, "one|two|three|four|all");

  for (auto* cmd : {sweep_cmd, ablate_cmd}) {
    cmd->add_option("--num-prompts", synth.num_prompts, "Synthetic prompts");
    cmd->add_option("--candidates", synth.candidates, "Candidates per prompt");
    cmd->add_option("--quality-gap", synth.quality_gap, "Latent quality band width");
    cmd->add_option("--noise-sigma", synth.noise_sigma, "Observation noise sigma");
    cmd->add_option("--from-run", synth.from_run, "Reuse a scored run dir instead of synthetic data");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = resolve_config(flags);

    if (score->parsed()) {
      print_banner("score", cfg);
      return do_score(cfg, prompts_path, retry_failed, flags.force);
    }
    if (pairs_cmd->parsed()) {
      print_banner("pairs", cfg);
      return do_pairs(cfg);
    }
    if (partition_cmd->parsed()) {
      print_banner("partition", cfg);
      return do_partition(cfg);
    }
    if (train_cmd->parsed()) {
      print_banner("train", cfg);
      return do_train(cfg);
    }
    if (export_cmd->parsed()) {
      print_banner("export", cfg);
      return do_export(cfg);
    }
    if (run_cmd->parsed()) {
      print_banner("run", cfg);
      return do_run(cfg, prompts_path, retry_failed, flags.force);
    }
    if (sweep_cmd->parsed()) {
      print_banner("sweep", cfg);
      return do_sweep(cfg, synth, tau1_csv, tau2_csv);
    }
    if (ablate_cmd->parsed()) {
      print_banner("ablate", cfg);
      return do_ablate(cfg, synth, variant);
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
