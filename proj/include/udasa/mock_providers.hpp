#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "udasa/providers.hpp"

namespace udasa {

// Deterministic in-process providers. Every mock is a pure function of
// (seed, inputs): repeated calls return bit-identical outputs, so full runs
// against mocks are reproducible byte-for-byte.

class MockGenerator final : public TextGenerator {
public:
  explicit MockGenerator(std::uint64_t seed = 0) : seed_(seed) {}

  // Forces exact responses for a prompt text (tests use this to pin NLI and
  // safety fixtures to known strings).
  void set_responses(const std::string& prompt_text, std::vector<std::string> responses);

  std::vector<std::string> generate(const GenerationRequest& req) override;
  std::string fingerprint() const override;

private:
  std::uint64_t seed_;
  std::map<std::string, std::vector<std::string>> overrides_;
};

class MockEmbedder final : public Embedder {
public:
  explicit MockEmbedder(std::uint64_t seed = 0, std::size_t dim = 8) : seed_(seed), dim_(dim) {}

  // Forces a raw vector for a text, letting tests choose cosine structure.
  void set_embedding(const std::string& text, std::vector<double> vector);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::string fingerprint() const override;

private:
  EmbeddingVector unit_vector_for(const std::string& text) const;

  std::uint64_t seed_;
  std::size_t dim_;
  std::map<std::string, std::vector<double>> overrides_;
};

class MockNli final : public NliScorer {
public:
  // With hashed_default = false unknown pairs score the uninformative prior
  // (1/3, 1/3, 1/3). With hashed_default = true unknown pairs get a seeded
  // pseudo-random distribution instead; end-to-end mock runs need the
  // per-response variation or every group fuses to one value and no
  // preference pair can be built.
  explicit MockNli(std::uint64_t seed = 0, bool hashed_default = false)
      : seed_(seed), hashed_default_(hashed_default) {}

  void set_fixture(const std::string& premise, const std::string& hypothesis,
                   NliDistribution dist);

  NliDistribution score(const std::string& premise, const std::string& hypothesis) override;
  std::string fingerprint() const override;

private:
  std::uint64_t seed_;
  bool hashed_default_;
  std::map<std::pair<std::string, std::string>, NliDistribution> fixtures_;
};

class MockSafety final : public SafetyScorer {
public:
  // Default for unknown text is 0 (benign prior); hashed_default draws a
  // small seeded unsafety in [0, 0.3) instead (same rationale as MockNli).
  explicit MockSafety(std::uint64_t seed = 0, bool hashed_default = false)
      : seed_(seed), hashed_default_(hashed_default) {}

  void set_fixture(const std::string& text, double unsafe);

  SafetyScore moderate(const std::string& text) override;
  std::string fingerprint() const override;

private:
  std::uint64_t seed_;
  bool hashed_default_;
  std::map<std::string, double> fixtures_;
};

// Provider set for end-to-end mock runs: hashed defaults on, everything
// derived from the run seed.
ProviderSet make_mock_providers(std::uint64_t seed, std::size_t embedding_dim = 8);

}  // namespace udasa
