#pragma once

#include <span>
#include <vector>

#include "udasa/policy.hpp"
#include "udasa/preference.hpp"

namespace udasa {

// Gradient with the same shape as the policy's logits. Rows for prompts
// absent from the batch stay zero.
using LogitGradient = std::vector<std::vector<double>>;

LogitGradient zero_gradient_like(const ToyPolicy& policy);

struct DpoBatchResult {
  double loss = 0.0;
  LogitGradient gradient;
};

// Mean DPO loss over a batch:
//   -log sigmoid(beta * [(log pi(y+) - log pi_ref(y+)) - (log pi(y-) - log pi_ref(y-))])
// with the analytic gradient w.r.t. the policy logits. Per-pair terms are
// computed into slots (OpenMP) and reduced serially in batch order, so the
// result is bit-stable for any thread count and matches the serial reference
// exactly.
DpoBatchResult dpo_loss(const ToyPolicy& policy, const ToyPolicy& reference,
                        std::span<const PreferencePair> batch, double beta);

// Serial reference used by tests and the benchmark.
DpoBatchResult dpo_loss_serial(const ToyPolicy& policy, const ToyPolicy& reference,
                               std::span<const PreferencePair> batch, double beta);

// Mean KL(pi(.|p) || pi_ref(.|p)) over the given prompt indices; >= 0, zero
// iff the per-prompt distributions are identical.
double kl_penalty(const ToyPolicy& policy, const ToyPolicy& reference,
                  std::span<const std::size_t> prompt_indices);

double kl_penalty_serial(const ToyPolicy& policy, const ToyPolicy& reference,
                         std::span<const std::size_t> prompt_indices);

struct KlResult {
  double value = 0.0;
  LogitGradient gradient;
};

// KL with gradient w.r.t. the policy logits:
//   d/d theta_j = pi_j * (log(pi_j / pi_ref_j) - KL_p) / num_prompts.
KlResult kl_penalty_with_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                              std::span<const std::size_t> prompt_indices);

// Implicit-reward margin of one pair; equals the logit difference
// (theta[chosen] - theta[rejected]) when the reference is uniform.
double pair_margin(const ToyPolicy& policy, const ToyPolicy& reference,
                   const PreferencePair& pair);

// Fraction of pairs ranked correctly by implicit reward; exact ties count
// one half, so an untrained policy scores exactly 0.5.
double preference_accuracy(const ToyPolicy& policy, const ToyPolicy& reference,
                           std::span<const PreferencePair> pairs);

// Mean implicit-reward margin (beta-scaled) over pairs; logged per eval.
double mean_reward_margin(const ToyPolicy& policy, const ToyPolicy& reference,
                          std::span<const PreferencePair> pairs, double beta);

}  // namespace udasa
