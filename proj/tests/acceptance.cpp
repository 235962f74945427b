// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits non-zero if any fail.
//
// Usage: udasa_acceptance --cli <path-to-udasa-binary> [--readme <path>]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "udasa/curriculum.hpp"
#include "udasa/dpo.hpp"
#include "udasa/experiments.hpp"
#include "udasa/pipeline.hpp"
#include "udasa/preference.hpp"
#include "udasa/rng.hpp"
#include "udasa/trainer.hpp"
#include "udasa/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace udasa;

namespace {

struct Checker {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path make_temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("udasa-accept-" + tag + "-" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- criterion 1

void criterion_fusion_fidelity(Checker& c, const fs::path& readme) {
  const auto row1 = fuse(0.1, 0.1, 0.1);
  c.require(std::abs(row1.u_total - 0.10) <= 1e-9, "fuse(0.1,0.1,0.1).u_total != 0.10");

  // independent high-precision softmax oracle, frozen before the build
  const double oracle = 0.40651886118348867;
  const auto row2 = fuse(0.7, 0.2, 0.1);
  c.require(std::abs(row2.u_total - oracle) <= 1e-9,
            "fuse(0.7,0.2,0.1).u_total differs from the softmax oracle");

  const std::string readme_text = read_file(readme);
  c.require(readme_text.find("0.40652") != std::string::npos &&
                readme_text.find("0.33") != std::string::npos,
            "fusion discrepancy for the reported rows is not documented in " + readme.string());
}

// ---------------------------------------------------------------- criterion 2

double brute_force_semantic(const std::vector<EmbeddingVector>& group) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t k = 0; k < group[i].values.size(); ++k) {
        dot += group[i].values[k] * group[j].values[k];
        na += group[i].values[k] * group[i].values[k];
        nb += group[j].values[k] * group[j].values[k];
      }
      sum += dot / (std::sqrt(na) * std::sqrt(nb));
      ++count;
    }
  }
  return std::min(1.0, std::max(0.0, 1.0 - sum / static_cast<double>(count)));
}

void criterion_semantic_metric(Checker& c) {
  const std::vector<EmbeddingVector> identical(5, EmbeddingVector{{0.25, -1.5, 0.75}});
  c.require(semantic_uncertainty(identical) == 0.0, "five identical embeddings != 0");

  const std::vector<EmbeddingVector> orthogonal = {EmbeddingVector{{1, 0}},
                                                   EmbeddingVector{{0, 1}}};
  c.require(semantic_uncertainty(orthogonal) == 1.0, "orthogonal pair != 1");
  const std::vector<EmbeddingVector> antipodal = {EmbeddingVector{{1, 0}},
                                                  EmbeddingVector{{-1, 0}}};
  c.require(semantic_uncertainty(antipodal) == 1.0, "antipodal pair did not clamp to 1");

  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    const std::size_t dim = 1 + uniform_index(rng, 16);
    std::vector<EmbeddingVector> group(n);
    for (auto& e : group) {
      e.values.resize(dim);
      for (auto& v : e.values) v = 2.0 * uniform_double(rng) - 1.0;
    }
    if (std::abs(semantic_uncertainty(group) - brute_force_semantic(group)) > 1e-9) {
      c.require(false, "random group " + std::to_string(trial) + " disagrees with brute force");
      return;
    }
  }
}

// ---------------------------------------------------------------- criterion 3

void criterion_partition(Checker& c) {
  std::mt19937_64 rng(33);
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 10000; ++i) {
    PreferencePair p;
    p.prompt_id = "q" + std::to_string(i);
    p.delta_u = uniform_double(rng);
    pairs.push_back(p);
  }
  const auto part = partition(pairs, CurriculumConfig{0.4, 0.7});

  std::array<std::set<std::string>, 3> expected;
  for (const auto& p : pairs) {
    if (p.delta_u > 0.7) expected[0].insert(p.prompt_id);
    else if (p.delta_u > 0.4) expected[1].insert(p.prompt_id);
    else expected[2].insert(p.prompt_id);
  }
  for (int s = 0; s < 3; ++s) {
    std::set<std::string> got;
    for (const auto& p : part.stages[s]) got.insert(p.prompt_id);
    if (got != expected[s]) {
      c.require(false, "stage " + std::to_string(s + 1) + " disagrees with brute-force filter");
      return;
    }
  }

  PreferencePair at_tau2;
  at_tau2.prompt_id = "b2";
  at_tau2.delta_u = 0.7;
  PreferencePair at_tau1;
  at_tau1.prompt_id = "b1";
  at_tau1.delta_u = 0.4;
  const auto boundary = partition({at_tau2, at_tau1}, CurriculumConfig{0.4, 0.7});
  c.require(boundary.stages[1].size() == 1 && boundary.stages[1][0].prompt_id == "b2",
            "delta_u = tau2 must land in stage 2");
  c.require(boundary.stages[2].size() == 1 && boundary.stages[2][0].prompt_id == "b1",
            "delta_u = tau1 must land in stage 3");
}

// ---------------------------------------------------------------- criterion 4

std::vector<std::vector<ScoredResponse>> small_groups(int prompts, int candidates) {
  std::vector<std::vector<ScoredResponse>> groups;
  for (int p = 0; p < prompts; ++p) {
    std::vector<ScoredResponse> group;
    for (int cnd = 0; cnd < candidates; ++cnd) {
      ScoredResponse r;
      r.prompt_id = "q" + std::to_string(p);
      r.response_id = "r" + std::to_string(cnd);
      group.push_back(std::move(r));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

void criterion_dpo(Checker& c) {
  constexpr double kLn2 = 0.69314718055994531;
  std::mt19937_64 rng(44);

  for (int trial = 0; trial < 10; ++trial) {
    const auto groups = small_groups(3, 3);
    ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);
    for (auto& row : policy.logits())
      for (auto& v : row) v = 2.0 * uniform_double(rng) - 1.0;
    std::vector<PreferencePair> batch;
    for (std::size_t i = 0; i < 1 + uniform_index(rng, 10); ++i) {
      PreferencePair p;
      p.prompt_id = "q" + std::to_string(uniform_index(rng, 3));
      p.chosen_id = "r" + std::to_string(uniform_index(rng, 3));
      do {
        p.rejected_id = "r" + std::to_string(uniform_index(rng, 3));
      } while (p.rejected_id == p.chosen_id);
      batch.push_back(p);
    }
    if (std::abs(dpo_loss(policy, policy, batch, 0.1).loss - kLn2) > 1e-12) {
      c.require(false, "loss at policy == reference differs from ln 2 by more than 1e-12");
      return;
    }
  }

  const double h = 1e-5;
  double worst = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    const int n_prompts = 2 + static_cast<int>(uniform_index(rng, 3));
    const int n_cands = 2 + static_cast<int>(uniform_index(rng, 3));
    const auto groups = small_groups(n_prompts, n_cands);
    ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);
    ToyPolicy reference = ToyPolicy::uniform_from_groups(groups);
    for (auto& row : policy.logits())
      for (auto& v : row) v = 2.0 * uniform_double(rng) - 1.0;
    for (auto& row : reference.logits())
      for (auto& v : row) v = 2.0 * uniform_double(rng) - 1.0;

    std::vector<PreferencePair> batch;
    for (std::size_t i = 0; i < 1 + uniform_index(rng, 6); ++i) {
      PreferencePair p;
      p.prompt_id = "q" + std::to_string(uniform_index(rng, n_prompts));
      p.chosen_id = "r" + std::to_string(uniform_index(rng, n_cands));
      do {
        p.rejected_id = "r" + std::to_string(uniform_index(rng, n_cands));
      } while (p.rejected_id == p.chosen_id);
      batch.push_back(p);
    }
    const double beta = 0.05 + uniform_double(rng);
    const auto dpo = dpo_loss(policy, reference, batch, beta);
    std::vector<std::size_t> prompts(n_prompts);
    for (int p = 0; p < n_prompts; ++p) prompts[p] = p;
    const auto kl = kl_penalty_with_grad(policy, reference, prompts);

    for (std::size_t p = 0; p < policy.logits().size(); ++p) {
      for (std::size_t cnd = 0; cnd < policy.logits()[p].size(); ++cnd) {
        const double saved = policy.logits()[p][cnd];
        policy.logits()[p][cnd] = saved + h;
        const double dpo_up = dpo_loss_serial(policy, reference, batch, beta).loss;
        const double kl_up = kl_penalty_serial(policy, reference, prompts);
        policy.logits()[p][cnd] = saved - h;
        const double dpo_down = dpo_loss_serial(policy, reference, batch, beta).loss;
        const double kl_down = kl_penalty_serial(policy, reference, prompts);
        policy.logits()[p][cnd] = saved;

        const double dpo_fd = (dpo_up - dpo_down) / (2.0 * h);
        const double kl_fd = (kl_up - kl_down) / (2.0 * h);
        const double dpo_denom =
            std::max({std::abs(dpo_fd), std::abs(dpo.gradient[p][cnd]), 1e-8});
        const double kl_denom = std::max({std::abs(kl_fd), std::abs(kl.gradient[p][cnd]), 1e-8});
        worst = std::max(worst, std::abs(dpo_fd - dpo.gradient[p][cnd]) / dpo_denom);
        worst = std::max(worst, std::abs(kl_fd - kl.gradient[p][cnd]) / kl_denom);
      }
    }
  }
  c.require(worst < 1e-5,
            "finite-difference gradient mismatch: max relative error " + std::to_string(worst));
}

// ---------------------------------------------------------------- criterion 5

void criterion_end_to_end_determinism(Checker& c, const std::string& cli) {
  const fs::path work = make_temp_dir("determinism");
  const fs::path prompts = work / "prompts.txt";
  {
    std::ofstream out(prompts);
    for (int i = 1; i <= 20; ++i) out << "acceptance question number " << i << "\n";
  }

  auto run_once = [&](const std::string& tag) {
    const fs::path run_dir = work / tag;
    const std::string cmd = cli + " run --run-dir " + run_dir.string() +
                            " --seed 20240601 --mock-providers --prompts " + prompts.string() +
                            " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0 ? run_dir : fs::path();
  };

  const fs::path a = run_once("a");
  const fs::path b = run_once("b");
  if (a.empty() || b.empty()) {
    c.require(false, "CLI run failed");
    fs::remove_all(work);
    return;
  }
  for (const char* artifact :
       {"responses.jsonl", "pairs.jsonl", "stages/plan.json", "metrics.jsonl", "policy.txt"}) {
    if (read_file(a / artifact) != read_file(b / artifact) ||
        read_file(a / artifact).empty()) {
      c.require(false, std::string("artifact differs or is empty across reruns: ") + artifact);
    }
  }
  fs::remove_all(work);
}

// ---------------------------------------------------------------- criterion 6

void criterion_learning_signal(Checker& c) {
  SyntheticSpec spec;  // defaults: 200 prompts x 5 candidates, sigma = 0
  spec.seed = 42;
  const auto data = generate_synthetic(spec);
  const auto groups = group_by_prompt(data.responses);
  const auto pairs = build_pairs_from_groups(groups, spec.seed).pairs;
  const auto eval_pairs = build_eval_pairs(groups, spec.seed);

  ToyPolicy policy = ToyPolicy::uniform_from_groups(groups);
  const ToyPolicy untrained = policy;
  const double before = preference_accuracy(untrained, untrained, eval_pairs);
  c.require(std::abs(before - 0.5) <= 1e-12,
            "untrained accuracy is " + std::to_string(before) + ", expected 0.5 by symmetry");

  const auto part = partition(pairs, CurriculumConfig{});
  const auto plan = default_stage_plan(part);
  TrainerConfig trainer;
  trainer.seed = spec.seed;
  const auto run = run_curriculum(policy, part.stages, plan, trainer);
  const double after = preference_accuracy(policy, run.reference, eval_pairs);
  std::printf("         curriculum learning signal: untrained %.3f -> trained %.4f\n", before,
              after);
  c.require(after >= 0.85, "trained accuracy " + std::to_string(after) + " below 0.85");
}

// ---------------------------------------------------------------- criterion 7

void criterion_schedule_shape(Checker& c) {
  PlanOptions options;
  const auto plan = plan_stages({24000, 24000, 24000}, options);  // all hit the 3000 cap
  c.require(plan[0].learning_rate == 3e-6, "stage 1 lr != 3e-6");
  c.require(plan[1].learning_rate == 5e-6, "stage 2 lr != 5e-6");
  c.require(plan[2].learning_rate == 5e-6, "stage 3 lr != 5e-6");
  c.require(plan[0].max_steps == 3000, "stage cap != 3000");

  for (const auto& stage : plan) {
    c.require(learning_rate_at(0, stage) == 0.0, "lr(0) != 0");
    c.require(learning_rate_at(stage.warmup_steps, stage) == stage.learning_rate,
              "lr(warmup) != stage lr");
    c.require(learning_rate_at(1500, stage) == stage.learning_rate, "mid-phase lr not constant");
    const double last = learning_rate_at(stage.max_steps - 1, stage);
    c.require(last > 0.0 && last <= stage.learning_rate / 100.0,
              "terminal decay does not approach 0");

    const double bound = stage.learning_rate /
                             std::min(stage.warmup_steps, stage.decay_window_steps) +
                         1e-15;
    double prev = learning_rate_at(0, stage);
    for (int step = 1; step < stage.max_steps; ++step) {
      const double lr = learning_rate_at(step, stage);
      if (lr < 0.0 || std::abs(lr - prev) > bound) {
        c.require(false, "schedule discontinuity at step " + std::to_string(step));
        return;
      }
      prev = lr;
    }
  }
}

// ---------------------------------------------------------------- criterion 8

void criterion_harnesses(Checker& c) {
  SyntheticSpec spec;
  spec.num_prompts = 120;
  spec.seed = 7;
  const auto data = generate_synthetic(spec);
  TrainerConfig trainer;
  trainer.seed = 7;
  const PlanOptions plan_options;

  const std::vector<double> grid = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto sweep = sweep_thresholds(grid, grid, data, trainer, plan_options);
  c.require(sweep.cells.size() == 21, "sweep over {0.2..0.8}^2 must populate 21 valid cells");

  const fs::path work = make_temp_dir("harness");
  write_sweep_csv(work / "sweep.csv", sweep);
  {
    std::ifstream in(work / "sweep.csv");
    std::string line;
    int rows = 0;
    bool header_seen = false;
    bool well_formed = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (line == "tau1,tau2,accuracy,eval_loss") {
        header_seen = true;
        continue;
      }
      ++rows;
      int commas = 0;
      for (char ch : line) commas += ch == ',';
      well_formed = well_formed && commas == 3;
    }
    c.require(header_seen && well_formed && rows == 21, "sweep.csv is not well-formed");
  }

  std::vector<AblationRow> rows;
  for (const auto variant : {AblationVariant::one, AblationVariant::two, AblationVariant::three,
                             AblationVariant::four}) {
    rows.push_back(ablate_stage_count(variant, data, trainer, plan_options));
  }
  write_ablation_csv(work / "ablation.csv", rows);
  {
    std::ifstream in(work / "ablation.csv");
    std::string line;
    int data_rows = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("variant,", 0) == 0) continue;
      ++data_rows;
    }
    c.require(data_rows == 4, "ablation.csv must contain 4 variant rows");
  }

  // union preservation for every splitter
  const auto groups = group_by_prompt(data.responses);
  const auto pairs = build_pairs_from_groups(groups, trainer.seed).pairs;
  for (const auto variant : {AblationVariant::one, AblationVariant::two, AblationVariant::three,
                             AblationVariant::four}) {
    const auto stages = split_by_thresholds(pairs, ablation_thresholds(variant));
    std::size_t total = 0;
    std::set<std::string> ids;
    for (const auto& stage : stages) {
      total += stage.size();
      for (const auto& p : stage) ids.insert(p.prompt_id);
    }
    c.require(total == pairs.size() && ids.size() == pairs.size(),
              "splitter dropped or duplicated pairs");
  }

  // report (not assert) the paper-scale orderings at toy scale
  const SweepCell* best = nullptr;
  for (const auto& cell : sweep.cells) {
    if (!best || cell.result.accuracy > best->result.accuracy) best = &cell;
  }
  std::printf("         sweep best cell: tau=(%.1f, %.1f) accuracy %.4f (paper optimum: 0.4, 0.7)\n",
              best->tau1, best->tau2, best->result.accuracy);
  std::printf("         ablation accuracies:");
  for (const auto& row : rows) std::printf(" %s=%.4f", row.variant.c_str(), row.result.accuracy);
  std::printf(" (paper ordering: three-stage best)\n");

  fs::remove_all(work);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = "./udasa";
  std::string readme = "README.md";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") cli = argv[i + 1];
    else if (flag == "--readme") readme = argv[i + 1];
  }

  struct Criterion {
    std::string name;
    std::function<void(Checker&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 fusion fidelity", [&](Checker& c) { criterion_fusion_fidelity(c, readme); }},
      {"2 semantic metric", criterion_semantic_metric},
      {"3 partition correctness", criterion_partition},
      {"4 dpo correctness", criterion_dpo},
      {"5 end-to-end determinism",
       [&](Checker& c) { criterion_end_to_end_determinism(c, cli); }},
      {"6 curriculum learning signal", criterion_learning_signal},
      {"7 schedule shape", criterion_schedule_shape},
      {"8 harness reproduction", criterion_harnesses},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Checker checker;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(checker);
    } catch (const std::exception& e) {
      checker.failures.push_back(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (checker.failures.empty()) {
      std::printf("[PASS] criterion %s (%.2fs)\n", criterion.name.c_str(), seconds);
    } else {
      ++failed;
      std::printf("[FAIL] criterion %s (%.2fs)\n", criterion.name.c_str(), seconds);
      for (const auto& f : checker.failures) std::printf("       - %s\n", f.c_str());
    }
    std::fflush(stdout);
  }
  if (failed != 0) std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
