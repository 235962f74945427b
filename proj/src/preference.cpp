#include "udasa/preference.hpp"

#include <algorithm>

#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

namespace udasa {

ojson to_record(const PreferencePair& p) {
  ojson rec;
  rec["prompt_id"] = p.prompt_id;
  rec["chosen_id"] = p.chosen_id;
  rec["rejected_id"] = p.rejected_id;
  rec["chosen_u"] = p.chosen_u;
  rec["rejected_u"] = p.rejected_u;
  rec["delta_u"] = p.delta_u;
  return rec;
}

PreferencePair pair_from_record(const ojson& rec) {
  PreferencePair p;
  p.prompt_id = rec.at("prompt_id").get<std::string>();
  p.chosen_id = rec.at("chosen_id").get<std::string>();
  p.rejected_id = rec.at("rejected_id").get<std::string>();
  p.chosen_u = rec.at("chosen_u").get<double>();
  p.rejected_u = rec.at("rejected_u").get<double>();
  p.delta_u = rec.at("delta_u").get<double>();
  return p;
}

std::optional<PreferencePair> build_pair(std::span<const ScoredResponse> group,
                                         std::mt19937_64& rng, const PairOptions& options,
                                         std::string* skip_reason) {
  if (group.size() < 2)
    throw InvalidInput("pair construction needs at least 2 responses, got " +
                       std::to_string(group.size()));
  for (const auto& r : group) {
    if (r.prompt_id != group.front().prompt_id)
      throw InvalidInput("mixed prompt ids in one response group: " + group.front().prompt_id +
                         " vs " + r.prompt_id);
  }

  // argmin on u_total, ties broken by smallest response_id.
  std::size_t best = 0;
  for (std::size_t i = 1; i < group.size(); ++i) {
    const double u = group[i].breakdown.u_total;
    const double ub = group[best].breakdown.u_total;
    if (u < ub || (u == ub && group[i].response_id < group[best].response_id)) best = i;
  }
  const double chosen_u = group[best].breakdown.u_total;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (i == best) continue;
    if (options.allow_tied_rejected || group[i].breakdown.u_total > chosen_u)
      eligible.push_back(i);
  }
  if (eligible.empty()) {
    if (skip_reason) *skip_reason = "degenerate-group";
    return std::nullopt;
  }

  const std::size_t rejected = eligible[uniform_index(rng, eligible.size())];
  PreferencePair pair;
  pair.prompt_id = group.front().prompt_id;
  pair.chosen_id = group[best].response_id;
  pair.rejected_id = group[rejected].response_id;
  pair.chosen_u = chosen_u;
  pair.rejected_u = group[rejected].breakdown.u_total;
  pair.delta_u = pair.rejected_u - pair.chosen_u;
  return pair;
}

PairBuildResult build_pairs_from_groups(const std::vector<std::vector<ScoredResponse>>& groups,
                                        std::uint64_t seed, const PairOptions& options) {
  PairBuildResult result;
  for (const auto& group : groups) {
    const std::string& prompt_id = group.front().prompt_id;
    if (group.size() < 2) {
      result.skips.push_back({prompt_id, "insufficient-responses"});
      continue;
    }
    auto rng = engine_for(seed, "pair:" + prompt_id);
    std::string reason;
    if (auto pair = build_pair(group, rng, options, &reason)) {
      result.pairs.push_back(std::move(*pair));
    } else {
      result.skips.push_back({prompt_id, reason});
    }
  }
  return result;
}

PairBuildResult build_pairs(const std::filesystem::path& run_dir, std::uint64_t seed,
                            const PairOptions& options) {
  const auto responses = load_scored_responses(run_dir);
  const auto result = build_pairs_from_groups(group_by_prompt(responses), seed, options);

  std::vector<ojson> pair_recs;
  pair_recs.reserve(result.pairs.size());
  for (const auto& p : result.pairs) pair_recs.push_back(to_record(p));
  jsonl::write_all(run_dir / "pairs.jsonl", pair_recs);

  std::vector<ojson> skip_recs;
  skip_recs.reserve(result.skips.size());
  for (const auto& s : result.skips) {
    ojson rec;
    rec["prompt_id"] = s.prompt_id;
    rec["reason"] = s.reason;
    skip_recs.push_back(std::move(rec));
  }
  jsonl::write_all(run_dir / "skips.jsonl", skip_recs);
  return result;
}

}  // namespace udasa
