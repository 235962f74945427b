#include "udasa/mock_providers.hpp"

#include <cmath>
#include <cstdio>

#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

namespace udasa {

namespace {

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace

void MockGenerator::set_responses(const std::string& prompt_text,
                                  std::vector<std::string> responses) {
  overrides_[prompt_text] = std::move(responses);
}

std::vector<std::string> MockGenerator::generate(const GenerationRequest& req) {
  req.validate();
  if (auto it = overrides_.find(req.prompt_text); it != overrides_.end()) {
    if (static_cast<int>(it->second.size()) < req.n)
      throw GenerationIncomplete("mock override has " + std::to_string(it->second.size()) +
                                 " responses, requested " + std::to_string(req.n));
    return std::vector<std::string>(it->second.begin(), it->second.begin() + req.n);
  }
  // The wrapped prompt is what a real provider would see; hashing it keeps the
  // mock on the same code path as the HTTP client.
  const std::string wrapped = generation_prompt(req.prompt_text, req.n);
  const std::uint64_t base =
      mix64(mix64(seed_, req.seed.value_or(0)), fnv1a64(wrapped));
  std::vector<std::string> out;
  out.reserve(req.n);
  for (int i = 0; i < req.n; ++i) {
    const std::uint64_t h = mix64(base, static_cast<std::uint64_t>(i));
    out.push_back("mock answer " + std::to_string(i + 1) + " [" + hex16(h) + "]");
  }
  return out;
}

std::string MockGenerator::fingerprint() const { return "mock-generator(seed=" + std::to_string(seed_) + ")"; }

void MockEmbedder::set_embedding(const std::string& text, std::vector<double> vector) {
  overrides_[text] = std::move(vector);
}

EmbeddingVector MockEmbedder::unit_vector_for(const std::string& text) const {
  std::mt19937_64 rng(mix64(seed_, fnv1a64(text)));
  std::vector<double> v(dim_);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = 2.0 * uniform_double(rng) - 1.0;
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return EmbeddingVector{std::move(v)};
}

std::vector<EmbeddingVector> MockEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidInput("embed: empty text list");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidInput("embed: empty text");
    if (auto it = overrides_.find(t); it != overrides_.end()) {
      out.push_back(EmbeddingVector{it->second});
    } else {
      out.push_back(unit_vector_for(t));
    }
  }
  return out;
}

std::string MockEmbedder::fingerprint() const {
  return "mock-embedder(seed=" + std::to_string(seed_) + ",dim=" + std::to_string(dim_) + ")";
}

void MockNli::set_fixture(const std::string& premise, const std::string& hypothesis,
                          NliDistribution dist) {
  fixtures_[{premise, hypothesis}] = dist;
}

NliDistribution MockNli::score(const std::string& premise, const std::string& hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw InvalidInput("nli: premise and hypothesis must be non-empty");
  if (auto it = fixtures_.find({premise, hypothesis}); it != fixtures_.end()) return it->second;
  if (!hashed_default_) return NliDistribution{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::mt19937_64 rng(mix64(mix64(seed_, fnv1a64(premise)), fnv1a64(hypothesis)));
  // Lean toward entailment so fused scores span a useful range.
  const double e = 0.25 + 0.7 * uniform_double(rng);
  const double split = uniform_double(rng);
  const double rest = 1.0 - e;
  return NliDistribution{e, rest * split, rest * (1.0 - split)};
}

std::string MockNli::fingerprint() const {
  return std::string("mock-nli(seed=") + std::to_string(seed_) +
         (hashed_default_ ? ",hashed" : ",uniform") + ")";
}

void MockSafety::set_fixture(const std::string& text, double unsafe) { fixtures_[text] = unsafe; }

SafetyScore MockSafety::moderate(const std::string& text) {
  if (text.empty()) throw InvalidInput("moderate: empty text");
  if (auto it = fixtures_.find(text); it != fixtures_.end()) return SafetyScore{it->second};
  if (!hashed_default_) return SafetyScore{0.0};
  std::mt19937_64 rng(mix64(seed_, fnv1a64(text)));
  return SafetyScore{0.3 * uniform_double(rng)};
}

std::string MockSafety::fingerprint() const {
  return std::string("mock-safety(seed=") + std::to_string(seed_) +
         (hashed_default_ ? ",hashed" : ",benign") + ")";
}

ProviderSet make_mock_providers(std::uint64_t seed, std::size_t embedding_dim) {
  ProviderSet set;
  set.generator = std::make_shared<MockGenerator>(mix64(seed, fnv1a64("generator")));
  set.embedder = std::make_shared<MockEmbedder>(mix64(seed, fnv1a64("embedder")), embedding_dim);
  set.nli = std::make_shared<MockNli>(mix64(seed, fnv1a64("nli")), /*hashed_default=*/true);
  set.safety = std::make_shared<MockSafety>(mix64(seed, fnv1a64("safety")), /*hashed_default=*/true);
  return set;
}

}  // namespace udasa
