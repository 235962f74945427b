#include "udasa/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

namespace udasa {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
  if (num_prompts < 1) throw InvalidInput("synthetic spec needs num_prompts >= 1");
  if (candidates_per_prompt < 2)
    throw InvalidInput("synthetic spec needs candidates_per_prompt >= 2");
  if (!(quality_gap > 0.0)) throw InvalidInput("synthetic spec needs quality_gap > 0");
  if (noise_sigma < 0.0) throw InvalidInput("synthetic spec needs noise_sigma >= 0");
}

double solve_fused_components(double u_sem, double target) {
  double lo = 0.0, hi = 1.0;
  const double f_lo = fuse(u_sem, lo, lo).u_total;
  const double f_hi = fuse(u_sem, hi, hi).u_total;
  if (target < f_lo || target > f_hi)
    throw InvalidInput("target u_total " + std::to_string(target) +
                       " outside attainable range [" + std::to_string(f_lo) + ", " +
                       std::to_string(f_hi) + "] for u_sem " + std::to_string(u_sem));
  // fuse(u_sem, t, t).u_total is continuous and strictly increasing in t.
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (fuse(u_sem, mid, mid).u_total < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData data;
  const double band_lo = 0.2;
  const double band_width = std::min(spec.quality_gap, 0.6);

  for (int i = 0; i < spec.num_prompts; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%04d", i + 1);
    Prompt prompt{id, "synthetic question " + std::to_string(i + 1)};
    auto rng = engine_for(spec.seed, "synthetic:" + prompt.id);

    // Small group-level semantic uncertainty keeps the whole latent band
    // attainable by the (u_fact = u_align = t) back-fill family.
    const double u_sem = 0.05 + 0.2 * uniform_double(rng);
    std::vector<double> latents(spec.candidates_per_prompt);
    for (auto& l : latents) l = band_lo + band_width * uniform_double(rng);

    std::vector<ScoredResponse> group;
    for (int j = 0; j < spec.candidates_per_prompt; ++j) {
      double target = 0.0;
      bool feasible = false;
      for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
        target = latents[j] + (spec.noise_sigma > 0.0 ? spec.noise_sigma * gaussian(rng) : 0.0);
        target = std::clamp(target, 0.0, 1.0);
        feasible = target >= fuse(u_sem, 0.0, 0.0).u_total &&
                   target <= fuse(u_sem, 1.0, 1.0).u_total;
      }
      if (!feasible)
        throw InvalidInput("synthetic observation for " + prompt.id +
                           " infeasible after 100 noise resamples (noise_sigma too large)");
      const double t = solve_fused_components(u_sem, target);

      char rid[16];
      std::snprintf(rid, sizeof(rid), "r%03d", j + 1);
      ScoredResponse r;
      r.prompt_id = prompt.id;
      r.response_id = rid;
      r.text = "synthetic candidate " + std::to_string(j + 1) + " for " + prompt.id;
      r.breakdown = fuse(u_sem, t, t);
      group.push_back(std::move(r));
    }
    data.prompts.push_back(std::move(prompt));
    data.latents.push_back(std::move(latents));
    for (auto& r : group) data.responses.push_back(std::move(r));
  }
  return data;
}

void write_synthetic_run(const fs::path& run_dir, const SyntheticData& data,
                         const SyntheticSpec& spec) {
  fs::create_directories(run_dir);
  {
    ojson manifest;
    char run_id[32];
    std::snprintf(run_id, sizeof(run_id), "run-%016llx",
                  static_cast<unsigned long long>(mix64(spec.seed, fnv1a64("synthetic"))));
    manifest["run_id"] = std::string(run_id);
    manifest["seed"] = spec.seed;
    manifest["n_responses"] = spec.candidates_per_prompt;
    manifest["providers"] = ojson{{"generator", "synthetic"},
                                  {"embedder", "synthetic"},
                                  {"nli", "synthetic"},
                                  {"safety", "synthetic"}};
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    manifest["created_at"] = std::string(buf);
    std::ofstream out(run_dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
  }
  std::vector<ojson> prompt_recs;
  for (const auto& p : data.prompts) {
    ojson rec;
    rec["id"] = p.id;
    rec["text"] = p.text;
    prompt_recs.push_back(std::move(rec));
  }
  jsonl::write_all(run_dir / "prompts.jsonl", prompt_recs);

  std::vector<ojson> response_recs;
  for (const auto& r : data.responses) response_recs.push_back(to_record(r));
  jsonl::write_all(run_dir / "responses.jsonl", response_recs);
}

std::vector<PreferencePair> build_eval_pairs(const std::vector<std::vector<ScoredResponse>>& groups,
                                             std::uint64_t seed) {
  return build_pairs_from_groups(groups, mix64(seed, fnv1a64("eval-pairs"))).pairs;
}

CellResult run_cell(const std::vector<std::vector<ScoredResponse>>& groups,
                    const std::vector<PreferencePair>& pairs,
                    const std::vector<PreferencePair>& eval_pairs,
                    const std::vector<double>& thresholds, const TrainerConfig& trainer_config,
                    const PlanOptions& plan_options) {
  const auto stages = split_by_thresholds(pairs, thresholds);
  std::vector<std::size_t> sizes;
  for (const auto& s : stages) sizes.push_back(s.size());
  const auto plan = plan_stages(sizes, plan_options);

  ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);
  const auto run = run_curriculum(policy, stages, plan, trainer_config);

  CellResult result;
  result.accuracy = preference_accuracy(policy, run.reference, eval_pairs);
  result.eval_loss = dpo_loss(policy, run.reference, eval_pairs, trainer_config.beta).loss;
  for (const auto& m : run.metrics) result.steps_total += m.steps_run;
  return result;
}

SweepResult sweep_thresholds(const std::vector<double>& tau1_values,
                             const std::vector<double>& tau2_values, const SyntheticData& data,
                             const TrainerConfig& trainer_config,
                             const PlanOptions& plan_options) {
  std::vector<std::pair<double, double>> valid;
  for (double t1 : tau1_values) {
    for (double t2 : tau2_values) {
      if (t1 >= 0.0 && t2 <= 1.0 && t1 < t2) valid.emplace_back(t1, t2);
    }
  }
  if (valid.empty()) throw InvalidInput("threshold grid has no valid (tau1 < tau2) cell");
  std::sort(valid.begin(), valid.end());

  const auto groups = group_by_prompt(data.responses);
  const auto pairs = build_pairs_from_groups(groups, trainer_config.seed).pairs;
  const auto eval_pairs = build_eval_pairs(groups, trainer_config.seed);

  SweepResult result;
  result.cells.resize(valid.size());
  // Cells are independent; each writes only its own slot.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(valid.size()); ++i) {
    const auto [t1, t2] = valid[i];
    result.cells[i].tau1 = t1;
    result.cells[i].tau2 = t2;
    result.cells[i].result =
        run_cell(groups, pairs, eval_pairs, {t1, t2}, trainer_config, plan_options);
  }
  return result;
}

void write_sweep_csv(const fs::path& path, const SweepResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw Error("cannot write " + path.string());
  out << "# accuracy = held-out preference accuracy of the toy policy, a desk-scale proxy "
         "for judged alignment scores\n";
  out << "tau1,tau2,accuracy,eval_loss\n";
  for (const auto& c : result.cells) {
    out << format_double(c.tau1) << ',' << format_double(c.tau2) << ','
        << format_double(c.result.accuracy) << ',' << format_double(c.result.eval_loss) << '\n';
  }
}

AblationVariant ablation_variant_from_string(const std::string& name) {
  if (name == "one") return AblationVariant::one;
  if (name == "two") return AblationVariant::two;
  if (name == "three") return AblationVariant::three;
  if (name == "four") return AblationVariant::four;
  throw ConfigError("unknown ablation variant '" + name + "' (expected one|two|three|four)");
}

std::vector<double> ablation_thresholds(AblationVariant variant) {
  switch (variant) {
    case AblationVariant::one: return {};
    case AblationVariant::two: return {0.6};
    case AblationVariant::three: return {0.3, 0.6};
    case AblationVariant::four: return {0.2, 0.5, 0.8};
  }
  throw ConfigError("unknown ablation variant");
}

namespace {

std::string variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::one: return "one";
    case AblationVariant::two: return "two";
    case AblationVariant::three: return "three";
    case AblationVariant::four: return "four";
  }
  return "?";
}

}  // namespace

AblationRow ablate_stage_count(AblationVariant variant, const SyntheticData& data,
                               const TrainerConfig& trainer_config,
                               const PlanOptions& plan_options) {
  const auto groups = group_by_prompt(data.responses);
  const auto pairs = build_pairs_from_groups(groups, trainer_config.seed).pairs;
  const auto eval_pairs = build_eval_pairs(groups, trainer_config.seed);

  const auto thresholds = ablation_thresholds(variant);
  const auto stages = split_by_thresholds(pairs, thresholds);
  std::vector<std::size_t> sizes;
  for (const auto& s : stages) sizes.push_back(s.size());
  const auto plan = plan_stages(sizes, plan_options);

  ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);
  const auto run = run_curriculum(policy, stages, plan, trainer_config);

  AblationRow row;
  row.variant = variant_name(variant);
  row.metrics = run.metrics;
  row.result.accuracy = preference_accuracy(policy, run.reference, eval_pairs);
  row.result.eval_loss = dpo_loss(policy, run.reference, eval_pairs, trainer_config.beta).loss;
  for (const auto& m : run.metrics) row.result.steps_total += m.steps_run;
  return row;
}

void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw Error("cannot write " + path.string());
  out << "# accuracy = held-out preference accuracy of the toy policy, a desk-scale proxy "
         "for judged alignment scores\n";
  out << "variant,accuracy,eval_loss,steps_total\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << format_double(r.result.accuracy) << ','
        << format_double(r.result.eval_loss) << ',' << r.result.steps_total << '\n';
  }
}

}  // namespace udasa
