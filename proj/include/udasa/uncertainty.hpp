#pragma once

#include <span>
#include <vector>

namespace udasa {

// Sentence embedding of one response. All embeddings in a response group must
// share the same dimension and be non-zero.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

// Entailment / neutral / contradiction probabilities for one premise-hypothesis
// pair. Components are in [0,1] and sum to 1 within 1e-6.
struct NliDistribution {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;

  // Accepts raw provider output: each component must be in [0,1] and the sum
  // within 1e-3 of 1 (float-serialization slack); the result is renormalized
  // to sum to 1. Anything further off is a broken provider.
  static NliDistribution from_raw(double entailment, double neutral, double contradiction);

  bool valid() const;
};

// Unsafety probability from the content safety classifier.
struct SafetyScore {
  double unsafe = 0.0;
};

// Per-response uncertainty components, their softmax weights, and the fused
// total. Invariants: weights sum to 1 within 1e-9; u_total is the weighted
// combination and lies between the min and max component.
struct UncertaintyBreakdown {
  double u_sem = 0.0;
  double u_fact = 0.0;
  double u_align = 0.0;
  double alpha_sem = 0.0;
  double alpha_fact = 0.0;
  double alpha_align = 0.0;
  double u_total = 0.0;
};

// cos(a, b) = dot(a,b) / sqrt(dot(a,a) * dot(b,b)). Exactly 1 for bitwise
// identical vectors and exactly -1 for exact negations (sqrt(x*x) == x in
// round-to-nearest), which keeps the trivial score cases exact.
double pairwise_cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Group-level semantic uncertainty: clamp(1 - mean pairwise cosine, 0, 1)
// over all N(N-1)/2 unordered pairs. Requires N >= 2, uniform dimension,
// non-zero vectors. The pair cosines are sorted before accumulation so the
// score is bit-identical under any permutation of the input list and under
// any OpenMP thread count.
double semantic_uncertainty(std::span<const EmbeddingVector> embeddings);

// Serial reference for the parallel kernel; identical semantics, no OpenMP.
double semantic_uncertainty_serial(std::span<const EmbeddingVector> embeddings);

// Neutral + contradiction mass, clamped to [0,1].
double factual_uncertainty(const NliDistribution& dist);

// The unsafety probability passes through unchanged.
double alignment_uncertainty(const SafetyScore& score);

// Softmax fusion: alpha_i = exp(u_i) / sum_j exp(u_j), u_total = sum alpha_i u_i.
// Inputs must be finite and in [0,1]. u_total is nudged into
// [min(u), max(u)] to keep the convex-combination invariant exact under
// rounding (equal inputs fuse to exactly that value).
UncertaintyBreakdown fuse(double u_sem, double u_fact, double u_align);

}  // namespace udasa
