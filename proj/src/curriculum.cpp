#include "udasa/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "udasa/errors.hpp"

namespace udasa {

namespace fs = std::filesystem;

void CurriculumConfig::validate() const {
  if (!(tau1 >= 0.0 && tau1 < tau2 && tau2 <= 1.0))
    throw InvalidInput("curriculum thresholds need 0 <= tau1 < tau2 <= 1, got tau1=" +
                       std::to_string(tau1) + " tau2=" + std::to_string(tau2));
}

std::vector<std::vector<PreferencePair>> split_by_thresholds(
    const std::vector<PreferencePair>& pairs, const std::vector<double>& thresholds) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0.0 || thresholds[i] > 1.0)
      throw InvalidInput("threshold out of [0,1]: " + std::to_string(thresholds[i]));
    if (i > 0 && !(thresholds[i - 1] < thresholds[i]))
      throw InvalidInput("thresholds must be strictly increasing");
  }
  const std::size_t n_stages = thresholds.size() + 1;
  std::vector<std::vector<PreferencePair>> stages(n_stages);
  for (const auto& p : pairs) {
    // Stage 1 takes the largest gaps; boundaries belong to the lower bucket
    // (delta_u <= t stays below t's stage).
    std::size_t stage = 0;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      if (p.delta_u <= thresholds[thresholds.size() - 1 - k]) ++stage;
      else break;
    }
    stages[stage].push_back(p);
  }
  for (auto& stage : stages) {
    std::sort(stage.begin(), stage.end(), [](const PreferencePair& a, const PreferencePair& b) {
      if (a.delta_u != b.delta_u) return a.delta_u > b.delta_u;
      return a.prompt_id < b.prompt_id;
    });
  }
  return stages;
}

StagePartition partition(const std::vector<PreferencePair>& pairs,
                         const CurriculumConfig& config) {
  config.validate();
  StagePartition out;
  out.config = config;
  out.stages = split_by_thresholds(pairs, {config.tau1, config.tau2});
  return out;
}

std::vector<StageConfig> plan_stages(const std::vector<std::size_t>& stage_sizes,
                                     const PlanOptions& options) {
  if (options.batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  std::vector<StageConfig> plan;
  plan.reserve(stage_sizes.size());
  for (std::size_t i = 0; i < stage_sizes.size(); ++i) {
    StageConfig cfg;
    cfg.stage_index = static_cast<int>(i + 1);
    cfg.learning_rate = (i == 0) ? options.lr_first_stage : options.lr_later_stages;
    cfg.warmup_steps = options.warmup_steps;
    const std::size_t epoch_steps =
        (stage_sizes[i] + options.batch_size - 1) / options.batch_size;
    cfg.max_steps = static_cast<int>(
        std::min<std::size_t>(epoch_steps, static_cast<std::size_t>(options.step_cap)));
    cfg.max_epochs = 1;
    cfg.early_stop_patience = options.early_stop_patience;
    cfg.kl_coefficient =
        (stage_sizes.size() >= 2 && i + 1 == stage_sizes.size()) ? options.kl_coefficient : 0.0;
    cfg.decay_window_steps =
        std::max(1, static_cast<int>(options.decay_fraction * cfg.max_steps));
    plan.push_back(cfg);
  }
  return plan;
}

std::vector<StageConfig> default_stage_plan(const StagePartition& partition,
                                            const PlanOptions& options) {
  std::vector<std::size_t> sizes;
  sizes.reserve(partition.stages.size());
  for (const auto& s : partition.stages) sizes.push_back(s.size());
  return plan_stages(sizes, options);
}

double learning_rate_at(int step, const StageConfig& config) {
  if (step < 0 || step >= config.max_steps)
    throw InvalidInput("step " + std::to_string(step) + " outside [0, " +
                       std::to_string(config.max_steps) + ")");
  const double ramp = config.warmup_steps > 0
                          ? static_cast<double>(step) / config.warmup_steps
                          : 1.0;
  const double decay =
      static_cast<double>(config.max_steps - step) / config.decay_window_steps;
  return config.learning_rate * std::min({ramp, 1.0, decay});
}

void write_partition(const fs::path& run_dir, const StagePartition& partition,
                     const std::vector<StageConfig>& plan) {
  const fs::path stages_dir = run_dir / "stages";
  fs::create_directories(stages_dir);
  for (std::size_t i = 0; i < partition.stages.size(); ++i) {
    std::vector<ojson> recs;
    recs.reserve(partition.stages[i].size());
    for (const auto& p : partition.stages[i]) recs.push_back(to_record(p));
    jsonl::write_all(stages_dir / ("stage" + std::to_string(i + 1) + ".jsonl"), recs);
  }

  ojson plan_json;
  plan_json["tau1"] = partition.config.tau1;
  plan_json["tau2"] = partition.config.tau2;
  plan_json["stages"] = ojson::array();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    ojson s;
    s["stage"] = plan[i].stage_index;
    s["lr"] = plan[i].learning_rate;
    s["warmup_steps"] = plan[i].warmup_steps;
    s["max_steps"] = plan[i].max_steps;
    s["kl_coefficient"] = plan[i].kl_coefficient;
    s["early_stop_patience"] = plan[i].early_stop_patience;
    s["num_pairs"] = partition.stages[i].size();
    plan_json["stages"].push_back(std::move(s));
  }
  std::ofstream out(stages_dir / "plan.json", std::ios::trunc);
  if (!out.good()) throw Error("cannot write " + (stages_dir / "plan.json").string());
  out << plan_json.dump(2) << '\n';
}

LoadedPartition load_partition(const fs::path& run_dir, double decay_fraction) {
  const fs::path plan_path = run_dir / "stages" / "plan.json";
  if (!fs::exists(plan_path)) throw Error("missing " + plan_path.string());
  std::ifstream in(plan_path);
  const ojson plan_json = ojson::parse(in);

  LoadedPartition loaded;
  loaded.tau1 = plan_json.at("tau1").get<double>();
  loaded.tau2 = plan_json.at("tau2").get<double>();
  for (const auto& s : plan_json.at("stages")) {
    StageConfig cfg;
    cfg.stage_index = s.at("stage").get<int>();
    cfg.learning_rate = s.at("lr").get<double>();
    cfg.warmup_steps = s.at("warmup_steps").get<int>();
    cfg.max_steps = s.at("max_steps").get<int>();
    cfg.kl_coefficient = s.at("kl_coefficient").get<double>();
    cfg.early_stop_patience = s.at("early_stop_patience").get<int>();
    cfg.decay_window_steps = std::max(1, static_cast<int>(decay_fraction * cfg.max_steps));
    loaded.plan.push_back(cfg);

    const fs::path stage_path =
        run_dir / "stages" / ("stage" + std::to_string(cfg.stage_index) + ".jsonl");
    if (!fs::exists(stage_path)) throw Error("missing " + stage_path.string());
    std::vector<PreferencePair> pairs;
    for (const auto& rec : jsonl::load(stage_path)) pairs.push_back(pair_from_record(rec));
    loaded.stages.push_back(std::move(pairs));
  }
  return loaded;
}

}  // namespace udasa
