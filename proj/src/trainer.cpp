#include "udasa/trainer.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>

#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

namespace udasa {

namespace fs = std::filesystem;

void TrainerConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("trainer beta must be > 0");
  if (batch_size < 1) throw ConfigError("trainer batch_size must be >= 1");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw ConfigError("trainer eval_fraction must be in (0,1)");
  if (eval_interval < 1) throw ConfigError("trainer eval_interval must be >= 1");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::cap: return "cap";
    case StopReason::early_stop: return "early-stop";
    case StopReason::empty: return "empty";
  }
  return "unknown";
}

namespace {

struct EvalSplit {
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> eval;
};

EvalSplit split_eval(const std::vector<PreferencePair>& pairs, double eval_fraction,
                     std::uint64_t seed, int stage_index) {
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = engine_for(seed, "eval-split:" + std::to_string(stage_index));
  deterministic_shuffle(order, rng);

  // Hold out floor(f*n), but never the whole stage; single-pair stages train
  // without an eval set.
  std::size_t n_eval = static_cast<std::size_t>(eval_fraction * pairs.size());
  if (n_eval == 0 && pairs.size() >= 2) n_eval = 1;
  if (n_eval >= pairs.size()) n_eval = pairs.size() - 1;

  EvalSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_eval) split.eval.push_back(pairs[order[i]]);
    else split.train.push_back(pairs[order[i]]);
  }
  return split;
}

std::vector<std::size_t> unique_prompt_indices(const ToyPolicy& policy,
                                               std::span<const PreferencePair> batch) {
  std::vector<std::size_t> out;
  out.reserve(batch.size());
  for (const auto& pair : batch) {
    const std::size_t p = policy.prompt_index(pair.prompt_id);
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

}  // namespace

StageMetrics train_stage(ToyPolicy& policy, const ToyPolicy& reference,
                         const std::vector<PreferencePair>& stage_pairs,
                         const StageConfig& stage_config, const TrainerConfig& trainer_config) {
  trainer_config.validate();
  StageMetrics metrics;
  metrics.stage_index = stage_config.stage_index;
  if (stage_pairs.empty() || stage_config.max_steps <= 0) {
    metrics.stop_reason = StopReason::empty;
    return metrics;
  }

  const EvalSplit split = split_eval(stage_pairs, trainer_config.eval_fraction,
                                     trainer_config.seed, stage_config.stage_index);
  const auto& train_pairs = split.train;
  const auto& eval_pairs = split.eval;

  const std::size_t steps_per_epoch =
      (train_pairs.size() + trainer_config.batch_size - 1) / trainer_config.batch_size;

  std::vector<std::size_t> order(train_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_eval = std::numeric_limits<double>::infinity();
  int evals_without_improvement = 0;
  metrics.stop_reason = StopReason::cap;

  int epoch = -1;
  for (int step = 0; step < stage_config.max_steps; ++step) {
    const int this_epoch = static_cast<int>(step / steps_per_epoch);
    if (this_epoch != epoch) {
      epoch = this_epoch;
      auto rng = engine_for(trainer_config.seed, "epoch:" + std::to_string(stage_config.stage_index) +
                                                     ":" + std::to_string(epoch));
      deterministic_shuffle(order, rng);
    }
    const std::size_t batch_start =
        (step % steps_per_epoch) * static_cast<std::size_t>(trainer_config.batch_size);
    const std::size_t batch_end =
        std::min(batch_start + trainer_config.batch_size, train_pairs.size());
    std::vector<PreferencePair> batch;
    batch.reserve(batch_end - batch_start);
    for (std::size_t i = batch_start; i < batch_end; ++i) batch.push_back(train_pairs[order[i]]);

    const double lr = learning_rate_at(step, stage_config);
    auto result = dpo_loss(policy, reference, batch, trainer_config.beta);

    StepRecord record;
    record.stage = stage_config.stage_index;
    record.step = step;
    record.lr = lr;

    double step_loss = result.loss;
    if (stage_config.kl_coefficient > 0.0) {
      const auto prompts = unique_prompt_indices(policy, batch);
      const auto kl = kl_penalty_with_grad(policy, reference, prompts);
      step_loss += stage_config.kl_coefficient * kl.value;
      record.kl = kl.value;
      for (std::size_t p = 0; p < result.gradient.size(); ++p) {
        for (std::size_t c = 0; c < result.gradient[p].size(); ++c)
          result.gradient[p][c] += stage_config.kl_coefficient * kl.gradient[p][c];
      }
    }
    record.train_loss = step_loss;

    auto& logits = policy.logits();
    for (std::size_t p = 0; p < logits.size(); ++p) {
      for (std::size_t c = 0; c < logits[p].size(); ++c)
        logits[p][c] -= lr * result.gradient[p][c];
    }

    const bool eval_now = !eval_pairs.empty() &&
                          ((step + 1) % trainer_config.eval_interval == 0 ||
                           step + 1 == stage_config.max_steps);
    if (eval_now) {
      const auto eval_result = dpo_loss(policy, reference, eval_pairs, trainer_config.beta);
      record.eval_loss = eval_result.loss;
      record.pref_acc = preference_accuracy(policy, reference, eval_pairs);
      record.margin = mean_reward_margin(policy, reference, eval_pairs, trainer_config.beta);
      if (eval_result.loss < best_eval - 1e-4) {
        best_eval = eval_result.loss;
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
      }
    }

    metrics.trace.push_back(std::move(record));
    metrics.steps_run = step + 1;

    if (eval_now && evals_without_improvement >= stage_config.early_stop_patience) {
      metrics.stop_reason = StopReason::early_stop;
      break;
    }
  }
  return metrics;
}

CurriculumRunResult run_curriculum(ToyPolicy& policy,
                                   const std::vector<std::vector<PreferencePair>>& stages,
                                   const std::vector<StageConfig>& plan,
                                   const TrainerConfig& trainer_config) {
  if (stages.size() != plan.size())
    throw InvalidInput("stage and plan counts differ: " + std::to_string(stages.size()) + " vs " +
                       std::to_string(plan.size()));
  bool any = false;
  for (const auto& s : stages) any = any || !s.empty();
  if (!any) throw Error("all curriculum stages are empty; nothing to train");

  CurriculumRunResult result;
  result.reference = policy;  // frozen before any update
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (trainer_config.refreeze_per_stage) result.reference = policy;
    result.metrics.push_back(
        train_stage(policy, result.reference, stages[i], plan[i], trainer_config));
  }
  return result;
}

void write_metrics(const fs::path& path, const std::vector<StageMetrics>& metrics) {
  std::vector<ojson> records;
  for (const auto& stage : metrics) {
    for (const auto& r : stage.trace) {
      ojson rec;
      rec["stage"] = r.stage;
      rec["step"] = r.step;
      rec["lr"] = r.lr;
      rec["train_loss"] = r.train_loss;
      if (r.eval_loss) rec["eval_loss"] = *r.eval_loss;
      if (r.pref_acc) rec["pref_acc"] = *r.pref_acc;
      if (r.kl) rec["kl"] = *r.kl;
      if (r.margin) rec["margin"] = *r.margin;
      records.push_back(std::move(rec));
    }
  }
  jsonl::write_all(path, records);
}

void export_stage_datasets(const fs::path& run_dir,
                           const std::vector<std::vector<PreferencePair>>& stages,
                           const std::vector<StageConfig>& plan,
                           const std::optional<std::string>& command_template) {
  if (stages.size() != plan.size()) throw InvalidInput("stage and plan counts differ");

  // Resolve full texts from the scored run.
  std::map<std::string, std::string> prompt_texts;
  for (const auto& rec : jsonl::load(run_dir / "prompts.jsonl"))
    prompt_texts[rec.at("id").get<std::string>()] = rec.at("text").get<std::string>();
  std::map<std::pair<std::string, std::string>, std::string> response_texts;
  for (const auto& r : load_scored_responses(run_dir))
    response_texts[{r.prompt_id, r.response_id}] = r.text;

  auto text_for = [&](const std::string& prompt_id, const std::string& response_id) {
    auto it = response_texts.find({prompt_id, response_id});
    if (it == response_texts.end())
      throw Error("run dir corrupt: no stored text for " + prompt_id + "/" + response_id);
    return it->second;
  };

  std::vector<fs::path> files;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    std::vector<ojson> recs;
    recs.reserve(stages[i].size());
    for (const auto& p : stages[i]) {
      auto pit = prompt_texts.find(p.prompt_id);
      if (pit == prompt_texts.end())
        throw Error("run dir corrupt: no stored prompt text for " + p.prompt_id);
      ojson rec;
      rec["prompt"] = pit->second;
      rec["chosen"] = text_for(p.prompt_id, p.chosen_id);
      rec["rejected"] = text_for(p.prompt_id, p.rejected_id);
      recs.push_back(std::move(rec));
    }
    const fs::path file = run_dir / ("stage" + std::to_string(i + 1) + "_dpo.jsonl");
    jsonl::write_all(file, recs);
    files.push_back(file);
  }

  if (!command_template) return;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    std::string cmd = *command_template;
    const auto substitute = [&cmd](const std::string& key, const std::string& value) {
      std::size_t pos = 0;
      while ((pos = cmd.find(key, pos)) != std::string::npos) {
        cmd.replace(pos, key.size(), value);
        pos += value.size();
      }
    };
    substitute("{stage}", std::to_string(plan[i].stage_index));
    substitute("{file}", files[i].string());
    substitute("{lr}", format_double(plan[i].learning_rate));
    substitute("{max_steps}", std::to_string(plan[i].max_steps));
    substitute("{kl}", format_double(plan[i].kl_coefficient));
    const int rc = std::system(cmd.c_str());
    if (rc != 0)
      throw ExternalCommandError("external trainer failed at stage " +
                                     std::to_string(plan[i].stage_index) + " (exit " +
                                     std::to_string(rc) + "): " + cmd,
                                 plan[i].stage_index);
  }
}

}  // namespace udasa
