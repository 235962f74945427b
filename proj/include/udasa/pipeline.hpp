#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "udasa/jsonl.hpp"
#include "udasa/providers.hpp"
#include "udasa/uncertainty.hpp"

namespace udasa {

struct Prompt {
  std::string id;
  std::string text;
};

// Reads prompts from a file. ".jsonl" files must contain {"id","text"}
// records; anything else is treated as plain text, one prompt per line, with
// ids assigned from the physical 1-based line number ("p1", "p2", ...).
// Blank plain-text lines are skipped. Duplicate ids and malformed lines are
// fatal.
std::vector<Prompt> ingest_prompts(const std::filesystem::path& path);

// One sampled response with its fused uncertainty.
struct ScoredResponse {
  std::string prompt_id;
  std::string response_id;
  std::string text;
  UncertaintyBreakdown breakdown;
};

ojson to_record(const ScoredResponse& r);
ScoredResponse scored_response_from_record(const ojson& rec);

// Responses grouped by prompt, preserving first-appearance order of the
// prompt in the source file.
std::vector<std::vector<ScoredResponse>> group_by_prompt(const std::vector<ScoredResponse>& rs);

std::vector<ScoredResponse> load_scored_responses(const std::filesystem::path& run_dir);

// Recomputes fuse() from each stored record's components and checks the
// stored weights and total against it (1e-9), plus group-level u_sem
// constancy. Throws InvalidInput on the first violation.
void validate_scored_responses(const std::vector<ScoredResponse>& rs);

struct ScoringConfig {
  int n_responses = 5;
  double temperature = 0.7;
  int workers = 1;
  bool retry_failed = false;
};

// Stage 1 for one prompt: generate n responses, embed them, compute the
// group-level semantic uncertainty once, score factual/alignment per
// response, and fuse. The per-prompt seed must already be derived from
// (run seed, prompt id) so results are independent of scheduling.
std::vector<ScoredResponse> score_prompt(const Prompt& prompt, int n, double temperature,
                                         const ProviderSet& providers,
                                         std::uint64_t prompt_seed);

struct ScoringSummary {
  std::size_t prompts_total = 0;
  std::size_t already_scored = 0;
  std::size_t skipped_failed = 0;  // present in errors.jsonl, not retried
  std::size_t scored = 0;
  std::size_t failed = 0;
  std::size_t new_records = 0;
};

// Stage 1 over a prompt set with resume support. Appends one record per
// response to <run_dir>/responses.jsonl in prompt order; per-prompt failures
// go to errors.jsonl and do not stop the run. Prompts already present in
// responses.jsonl (or recorded as failed, unless retry_failed) are skipped.
ScoringSummary run_scoring(const std::filesystem::path& run_dir,
                           const std::vector<Prompt>& prompts, const ProviderSet& providers,
                           const ScoringConfig& config, std::uint64_t seed);

// Writes manifest.json if absent (seed is recorded before any sampling);
// verifies seed/n compatibility otherwise unless force is set.
void write_or_check_manifest(const std::filesystem::path& run_dir, std::uint64_t seed,
                             int n_responses, const ProviderSet& providers, bool force);

std::uint64_t prompt_seed_for(std::uint64_t run_seed, const std::string& prompt_id);

}  // namespace udasa
