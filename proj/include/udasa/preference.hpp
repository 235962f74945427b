#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "udasa/jsonl.hpp"
#include "udasa/pipeline.hpp"

namespace udasa {

struct PreferencePair {
  std::string prompt_id;
  std::string chosen_id;
  std::string rejected_id;
  double chosen_u = 0.0;
  double rejected_u = 0.0;
  double delta_u = 0.0;
};

ojson to_record(const PreferencePair& p);
PreferencePair pair_from_record(const ojson& rec);

struct PairOptions {
  // When set, the rejected response is drawn from all non-chosen responses,
  // ties with the minimum included (pairs with delta_u = 0 become possible).
  bool allow_tied_rejected = false;
};

struct SkippedPrompt {
  std::string prompt_id;
  std::string reason;
};

// One pair from one prompt's scored responses: chosen is the argmin of
// u_total (ties broken by smallest response_id), rejected is drawn uniformly
// from the strictly-worse responses. Returns nullopt with reason
// "degenerate-group" when every u_total equals the minimum.
std::optional<PreferencePair> build_pair(std::span<const ScoredResponse> group,
                                         std::mt19937_64& rng, const PairOptions& options = {},
                                         std::string* skip_reason = nullptr);

struct PairBuildResult {
  std::vector<PreferencePair> pairs;
  std::vector<SkippedPrompt> skips;
};

// One pair per prompt group. The RNG is split per prompt from
// (seed, prompt_id), so the output is independent of grouping order and
// of which other prompts are present.
PairBuildResult build_pairs_from_groups(
    const std::vector<std::vector<ScoredResponse>>& groups, std::uint64_t seed,
    const PairOptions& options = {});

// File-level wrapper: reads <run_dir>/responses.jsonl, writes pairs.jsonl and
// skips.jsonl. Deterministic given the seed.
PairBuildResult build_pairs(const std::filesystem::path& run_dir, std::uint64_t seed,
                            const PairOptions& options = {});

}  // namespace udasa
