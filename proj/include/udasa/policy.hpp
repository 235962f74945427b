#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "udasa/pipeline.hpp"

namespace udasa {

// Tabular softmax policy over (prompt, candidate response) used by the
// built-in trainer. log pi(c | p) = logits[p][c] - logsumexp(logits[p]).
class ToyPolicy {
public:
  ToyPolicy() = default;

  // Uniform policy (all logits zero) over the candidate registry extracted
  // from scored response groups.
  static ToyPolicy uniform_from_groups(const std::vector<std::vector<ScoredResponse>>& groups);

  std::size_t num_prompts() const { return prompt_ids_.size(); }
  const std::vector<std::string>& prompt_ids() const { return prompt_ids_; }
  const std::vector<std::string>& candidates(std::size_t prompt_idx) const {
    return candidate_ids_[prompt_idx];
  }

  // Throws InvalidInput for unknown ids.
  std::size_t prompt_index(const std::string& prompt_id) const;
  std::size_t candidate_index(std::size_t prompt_idx, const std::string& response_id) const;

  double logit(std::size_t prompt_idx, std::size_t cand_idx) const {
    return logits_[prompt_idx][cand_idx];
  }
  std::vector<std::vector<double>>& logits() { return logits_; }
  const std::vector<std::vector<double>>& logits() const { return logits_; }

  double log_sum_exp(std::size_t prompt_idx) const;
  double log_prob(std::size_t prompt_idx, std::size_t cand_idx) const;
  std::vector<double> probabilities(std::size_t prompt_idx) const;

  bool same_registry(const ToyPolicy& other) const;

  // Plain-text dump: header line, then per prompt one "prompt <k> <json id>"
  // line followed by k "<logit> <json id>" lines. Logits use shortest
  // round-trip decimals, so save/load is bit-exact and files are
  // byte-reproducible.
  void save(const std::filesystem::path& path) const;
  static ToyPolicy load(const std::filesystem::path& path);

private:
  std::vector<std::string> prompt_ids_;
  std::unordered_map<std::string, std::size_t> prompt_index_;
  std::vector<std::vector<std::string>> candidate_ids_;
  std::vector<std::unordered_map<std::string, std::size_t>> candidate_index_;
  std::vector<std::vector<double>> logits_;
};

}  // namespace udasa
