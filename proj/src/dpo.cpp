#include "udasa/dpo.hpp"

#include <algorithm>
#include <cmath>

#include "udasa/errors.hpp"

namespace udasa {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// 1 / (1 + e^-x), saturating safely.
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct PairTerm {
  double loss = 0.0;
  double weight = 0.0;  // beta * sigmoid(-beta * margin), before the 1/B mean
  std::size_t prompt = 0;
  std::size_t chosen = 0;
  std::size_t rejected = 0;
};

PairTerm pair_term(const ToyPolicy& policy, const ToyPolicy& reference,
                   const PreferencePair& pair, double beta) {
  PairTerm t;
  t.prompt = policy.prompt_index(pair.prompt_id);
  t.chosen = policy.candidate_index(t.prompt, pair.chosen_id);
  t.rejected = policy.candidate_index(t.prompt, pair.rejected_id);
  const std::size_t rp = reference.prompt_index(pair.prompt_id);
  const std::size_t rc = reference.candidate_index(rp, pair.chosen_id);
  const std::size_t rr = reference.candidate_index(rp, pair.rejected_id);

  const double margin = (policy.log_prob(t.prompt, t.chosen) - reference.log_prob(rp, rc)) -
                        (policy.log_prob(t.prompt, t.rejected) - reference.log_prob(rp, rr));
  t.loss = softplus(-beta * margin);
  t.weight = beta * sigmoid(-beta * margin);
  return t;
}

DpoBatchResult reduce_terms(const ToyPolicy& policy, const std::vector<PairTerm>& terms) {
  DpoBatchResult out;
  out.gradient = zero_gradient_like(policy);
  const double inv_b = 1.0 / static_cast<double>(terms.size());
  for (const auto& t : terms) {
    out.loss += t.loss;
    // d margin / d theta is +1 at the chosen and -1 at the rejected logit;
    // the softmax terms cancel between the two log-probs.
    out.gradient[t.prompt][t.chosen] -= t.weight * inv_b;
    out.gradient[t.prompt][t.rejected] += t.weight * inv_b;
  }
  out.loss *= inv_b;
  return out;
}

double prompt_kl(const ToyPolicy& policy, const ToyPolicy& reference, std::size_t p) {
  const auto probs = policy.probabilities(p);
  const double lse = policy.log_sum_exp(p);
  const double ref_lse = reference.log_sum_exp(p);
  double kl = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double log_ratio =
        (policy.logit(p, c) - lse) - (reference.logit(p, c) - ref_lse);
    kl += probs[c] * log_ratio;
  }
  return std::max(kl, 0.0);
}

void check_registries(const ToyPolicy& policy, const ToyPolicy& reference) {
  if (!policy.same_registry(reference))
    throw InvalidInput("policy and reference have different registries");
}

}  // namespace

LogitGradient zero_gradient_like(const ToyPolicy& policy) {
  LogitGradient g(policy.num_prompts());
  for (std::size_t p = 0; p < policy.num_prompts(); ++p)
    g[p].assign(policy.candidates(p).size(), 0.0);
  return g;
}

DpoBatchResult dpo_loss(const ToyPolicy& policy, const ToyPolicy& reference,
                        std::span<const PreferencePair> batch, double beta) {
  check_registries(policy, reference);
  if (batch.empty()) throw InvalidInput("dpo_loss: empty batch");
  if (!(beta > 0.0)) throw InvalidInput("dpo_loss: beta must be > 0");
  std::vector<PairTerm> terms(batch.size());
  bool failed = false;
  std::string error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch.size()); ++i) {
    try {
      terms[i] = pair_term(policy, reference, batch[i], beta);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        error = e.what();
      }
    }
  }
  if (failed) throw InvalidInput(error);
  return reduce_terms(policy, terms);
}

DpoBatchResult dpo_loss_serial(const ToyPolicy& policy, const ToyPolicy& reference,
                               std::span<const PreferencePair> batch, double beta) {
  check_registries(policy, reference);
  if (batch.empty()) throw InvalidInput("dpo_loss: empty batch");
  if (!(beta > 0.0)) throw InvalidInput("dpo_loss: beta must be > 0");
  std::vector<PairTerm> terms;
  terms.reserve(batch.size());
  for (const auto& pair : batch) terms.push_back(pair_term(policy, reference, pair, beta));
  return reduce_terms(policy, terms);
}

double kl_penalty(const ToyPolicy& policy, const ToyPolicy& reference,
                  std::span<const std::size_t> prompt_indices) {
  check_registries(policy, reference);
  if (prompt_indices.empty()) return 0.0;
  std::vector<double> values(prompt_indices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(prompt_indices.size()); ++i)
    values[i] = prompt_kl(policy, reference, prompt_indices[i]);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(prompt_indices.size());
}

double kl_penalty_serial(const ToyPolicy& policy, const ToyPolicy& reference,
                         std::span<const std::size_t> prompt_indices) {
  check_registries(policy, reference);
  if (prompt_indices.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t p : prompt_indices) sum += prompt_kl(policy, reference, p);
  return sum / static_cast<double>(prompt_indices.size());
}

KlResult kl_penalty_with_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                              std::span<const std::size_t> prompt_indices) {
  check_registries(policy, reference);
  {
    std::vector<std::size_t> sorted(prompt_indices.begin(), prompt_indices.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw InvalidInput("kl_penalty_with_grad: prompt indices must be distinct");
  }
  KlResult out;
  out.gradient = zero_gradient_like(policy);
  if (prompt_indices.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(prompt_indices.size());
  std::vector<double> values(prompt_indices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(prompt_indices.size()); ++i) {
    const std::size_t p = prompt_indices[i];
    const auto probs = policy.probabilities(p);
    const double lse = policy.log_sum_exp(p);
    const double ref_lse = reference.log_sum_exp(p);
    double kl = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
      const double log_ratio = (policy.logit(p, c) - lse) - (reference.logit(p, c) - ref_lse);
      kl += probs[c] * log_ratio;
    }
    for (std::size_t c = 0; c < probs.size(); ++c) {
      const double log_ratio = (policy.logit(p, c) - lse) - (reference.logit(p, c) - ref_lse);
      out.gradient[p][c] = probs[c] * (log_ratio - kl) * inv_n;
    }
    values[i] = std::max(kl, 0.0);
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  out.value = sum * inv_n;
  return out;
}

double pair_margin(const ToyPolicy& policy, const ToyPolicy& reference,
                   const PreferencePair& pair) {
  const std::size_t p = policy.prompt_index(pair.prompt_id);
  const std::size_t c = policy.candidate_index(p, pair.chosen_id);
  const std::size_t r = policy.candidate_index(p, pair.rejected_id);
  const std::size_t rp = reference.prompt_index(pair.prompt_id);
  return (policy.log_prob(p, c) - reference.log_prob(rp, reference.candidate_index(rp, pair.chosen_id))) -
         (policy.log_prob(p, r) - reference.log_prob(rp, reference.candidate_index(rp, pair.rejected_id)));
}

double preference_accuracy(const ToyPolicy& policy, const ToyPolicy& reference,
                           std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw InvalidInput("preference_accuracy: no pairs");
  double correct = 0.0;
  for (const auto& pair : pairs) {
    const double m = pair_margin(policy, reference, pair);
    if (m > 0.0) correct += 1.0;
    else if (m == 0.0) correct += 0.5;
  }
  return correct / static_cast<double>(pairs.size());
}

double mean_reward_margin(const ToyPolicy& policy, const ToyPolicy& reference,
                          std::span<const PreferencePair> pairs, double beta) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pair : pairs) sum += beta * pair_margin(policy, reference, pair);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace udasa
