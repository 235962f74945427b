#include "udasa/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "udasa/errors.hpp"

namespace udasa {

ToyPolicy ToyPolicy::uniform_from_groups(const std::vector<std::vector<ScoredResponse>>& groups) {
  ToyPolicy p;
  for (const auto& group : groups) {
    if (group.empty()) continue;
    const std::string& prompt_id = group.front().prompt_id;
    if (p.prompt_index_.count(prompt_id))
      throw InvalidInput("duplicate prompt group " + prompt_id);
    p.prompt_index_[prompt_id] = p.prompt_ids_.size();
    p.prompt_ids_.push_back(prompt_id);
    std::vector<std::string> cands;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& r : group) {
      if (!index.try_emplace(r.response_id, cands.size()).second)
        throw InvalidInput("duplicate response id " + r.response_id + " in prompt " + prompt_id);
      cands.push_back(r.response_id);
    }
    p.candidate_ids_.push_back(std::move(cands));
    p.candidate_index_.push_back(std::move(index));
    p.logits_.emplace_back(p.candidate_ids_.back().size(), 0.0);
  }
  return p;
}

std::size_t ToyPolicy::prompt_index(const std::string& prompt_id) const {
  auto it = prompt_index_.find(prompt_id);
  if (it == prompt_index_.end()) throw InvalidInput("unknown prompt id " + prompt_id);
  return it->second;
}

std::size_t ToyPolicy::candidate_index(std::size_t prompt_idx,
                                       const std::string& response_id) const {
  const auto& index = candidate_index_[prompt_idx];
  auto it = index.find(response_id);
  if (it == index.end())
    throw InvalidInput("unknown response id " + response_id + " for prompt " +
                       prompt_ids_[prompt_idx]);
  return it->second;
}

double ToyPolicy::log_sum_exp(std::size_t prompt_idx) const {
  const auto& row = logits_[prompt_idx];
  const double m = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - m);
  return m + std::log(sum);
}

double ToyPolicy::log_prob(std::size_t prompt_idx, std::size_t cand_idx) const {
  return logits_[prompt_idx][cand_idx] - log_sum_exp(prompt_idx);
}

std::vector<double> ToyPolicy::probabilities(std::size_t prompt_idx) const {
  const double lse = log_sum_exp(prompt_idx);
  std::vector<double> probs(logits_[prompt_idx].size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    probs[i] = std::exp(logits_[prompt_idx][i] - lse);
  return probs;
}

bool ToyPolicy::same_registry(const ToyPolicy& other) const {
  return prompt_ids_ == other.prompt_ids_ && candidate_ids_ == other.candidate_ids_;
}

void ToyPolicy::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw Error("cannot write " + path.string());
  out << "udasa-toy-policy v1\n";
  out << "prompts " << prompt_ids_.size() << '\n';
  for (std::size_t p = 0; p < prompt_ids_.size(); ++p) {
    out << "prompt " << candidate_ids_[p].size() << ' ' << ojson(prompt_ids_[p]).dump() << '\n';
    for (std::size_t c = 0; c < candidate_ids_[p].size(); ++c) {
      out << format_double(logits_[p][c]) << ' ' << ojson(candidate_ids_[p][c]).dump() << '\n';
    }
  }
}

namespace {

// Splits "<token> <rest>" at the first space.
std::pair<std::string, std::string> split_first(const std::string& line) {
  const auto pos = line.find(' ');
  if (pos == std::string::npos) return {line, ""};
  return {line.substr(0, pos), line.substr(pos + 1)};
}

std::string parse_json_string(const std::string& s, const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(s, nullptr, false);
  if (j.is_discarded() || !j.is_string())
    throw InvalidInput("corrupt policy file " + path.string() + ": bad id token " + s);
  return j.get<std::string>();
}

}  // namespace

ToyPolicy ToyPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw Error("cannot open policy file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "udasa-toy-policy v1")
    throw InvalidInput("bad policy header in " + path.string());
  if (!std::getline(in, line)) throw InvalidInput("truncated policy file " + path.string());
  auto [kw, count_str] = split_first(line);
  if (kw != "prompts") throw InvalidInput("bad prompts line in " + path.string());
  const std::size_t n_prompts = std::stoull(count_str);

  ToyPolicy p;
  for (std::size_t i = 0; i < n_prompts; ++i) {
    if (!std::getline(in, line)) throw InvalidInput("truncated policy file " + path.string());
    auto [tag, rest] = split_first(line);
    if (tag != "prompt") throw InvalidInput("bad prompt line in " + path.string());
    auto [k_str, id_json] = split_first(rest);
    const std::size_t k = std::stoull(k_str);
    const std::string prompt_id = parse_json_string(id_json, path);
    p.prompt_index_[prompt_id] = p.prompt_ids_.size();
    p.prompt_ids_.push_back(prompt_id);
    std::vector<std::string> cands;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> logits;
    for (std::size_t c = 0; c < k; ++c) {
      if (!std::getline(in, line)) throw InvalidInput("truncated policy file " + path.string());
      auto [logit_str, cand_json] = split_first(line);
      double v = 0.0;
      const auto res = std::from_chars(logit_str.data(), logit_str.data() + logit_str.size(), v);
      if (res.ec != std::errc())
        throw InvalidInput("bad logit in " + path.string() + ": " + logit_str);
      const std::string cand_id = parse_json_string(cand_json, path);
      index[cand_id] = cands.size();
      cands.push_back(cand_id);
      logits.push_back(v);
    }
    p.candidate_ids_.push_back(std::move(cands));
    p.candidate_index_.push_back(std::move(index));
    p.logits_.push_back(std::move(logits));
  }
  return p;
}

}  // namespace udasa
