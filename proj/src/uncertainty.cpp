#include "udasa/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "udasa/errors.hpp"

namespace udasa {

NliDistribution NliDistribution::from_raw(double entailment, double neutral,
                                          double contradiction) {
  for (double v : {entailment, neutral, contradiction}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw InvalidInput("NLI probability out of [0,1]: " + std::to_string(v));
  }
  const double sum = entailment + neutral + contradiction;
  if (std::abs(sum - 1.0) > 1e-3)
    throw InvalidInput("NLI probabilities sum to " + std::to_string(sum) + ", expected 1");
  return NliDistribution{entailment / sum, neutral / sum, contradiction / sum};
}

bool NliDistribution::valid() const {
  for (double v : {entailment, neutral, contradiction}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return std::abs(entailment + neutral + contradiction - 1.0) <= 1e-6;
}

double pairwise_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw InvalidInput("embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    dot += a.values[k] * b.values[k];
    na += a.values[k] * a.values[k];
    nb += b.values[k] * b.values[k];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidInput("zero embedding vector");
  return dot / std::sqrt(na * nb);
}

namespace {

std::size_t validate_group(std::span<const EmbeddingVector> embeddings) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw InvalidInput("semantic uncertainty needs at least 2 embeddings");
  const std::size_t dim = embeddings[0].dim();
  if (dim == 0) throw InvalidInput("empty embedding vector");
  for (const auto& e : embeddings) {
    if (e.dim() != dim) throw InvalidInput("embedding dimension mismatch within group");
  }
  return n;
}

// Canonical reduction shared by the parallel and serial paths: sort the pair
// cosines, then accumulate. Sorting makes the sum independent of both input
// order and pair enumeration order.
double reduce_pair_cosines(std::vector<double>& cosines) {
  std::sort(cosines.begin(), cosines.end());
  double sum = 0.0;
  for (double c : cosines) sum += c;
  const double sim_avg = sum / static_cast<double>(cosines.size());
  return std::clamp(1.0 - sim_avg, 0.0, 1.0);
}

}  // namespace

double semantic_uncertainty(std::span<const EmbeddingVector> embeddings) {
  const std::size_t n = validate_group(embeddings);
  const std::size_t pairs = n * (n - 1) / 2;
  std::vector<double> cosines(pairs);

  // Linearized upper-triangle index; each slot is written exactly once, so
  // the result does not depend on the schedule.
  bool bad_vector = false;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs); ++p) {
    // Invert p -> (i, j), i < j.
    std::size_t i = 0;
    std::size_t rem = static_cast<std::size_t>(p);
    while (rem >= n - 1 - i) {
      rem -= n - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + rem;
    double na = 0.0, nb = 0.0, dot = 0.0;
    const auto& a = embeddings[i].values;
    const auto& b = embeddings[j].values;
    for (std::size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) {
      bad_vector = true;
      cosines[p] = 0.0;
    } else {
      cosines[p] = dot / std::sqrt(na * nb);
    }
  }
  if (bad_vector) throw InvalidInput("zero embedding vector");
  return reduce_pair_cosines(cosines);
}

double semantic_uncertainty_serial(std::span<const EmbeddingVector> embeddings) {
  const std::size_t n = validate_group(embeddings);
  std::vector<double> cosines;
  cosines.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      cosines.push_back(pairwise_cosine(embeddings[i], embeddings[j]));
    }
  }
  return reduce_pair_cosines(cosines);
}

double factual_uncertainty(const NliDistribution& dist) {
  if (!dist.valid()) throw InvalidInput("invalid NLI distribution");
  return std::clamp(dist.neutral + dist.contradiction, 0.0, 1.0);
}

double alignment_uncertainty(const SafetyScore& score) {
  if (!std::isfinite(score.unsafe) || score.unsafe < 0.0 || score.unsafe > 1.0)
    throw InvalidInput("unsafety probability out of [0,1]: " + std::to_string(score.unsafe));
  return score.unsafe;
}

UncertaintyBreakdown fuse(double u_sem, double u_fact, double u_align) {
  for (double u : {u_sem, u_fact, u_align}) {
    if (!std::isfinite(u) || u < 0.0 || u > 1.0)
      throw InvalidInput("uncertainty score out of [0,1]: " + std::to_string(u));
  }
  const double m = std::max({u_sem, u_fact, u_align});
  const double e_sem = std::exp(u_sem - m);
  const double e_fact = std::exp(u_fact - m);
  const double e_align = std::exp(u_align - m);
  const double denom = e_sem + e_fact + e_align;

  UncertaintyBreakdown b;
  b.u_sem = u_sem;
  b.u_fact = u_fact;
  b.u_align = u_align;
  b.alpha_sem = e_sem / denom;
  b.alpha_fact = e_fact / denom;
  b.alpha_align = e_align / denom;
  const double total = b.alpha_sem * u_sem + b.alpha_fact * u_fact + b.alpha_align * u_align;
  const double lo = std::min({u_sem, u_fact, u_align});
  const double hi = m;
  b.u_total = std::clamp(total, lo, hi);
  return b;
}

}  // namespace udasa
