#pragma once

#include <memory>
#include <string>

#include "udasa/providers.hpp"

namespace udasa {

// HTTP JSON clients for the four capability endpoints. All requests are
// POSTs; each client enforces its own max_parallel in-flight limit and
// retries transport failures with exponential backoff (total attempts =
// max_retries + 1).
//
// Wire contracts:
//   POST /generate  {prompt, n, temperature, seed?} -> {responses: [string]}
//   POST /embed     {texts: [string]}               -> {vectors: [[number]]}
//   POST /nli       {premise, hypothesis}           -> {entailment, neutral, contradiction}
//   POST /moderate  {text}                          -> {unsafe: number}

class HttpChannel;  // shared transport: retries, backoff, rate limit, auth

class HttpGenerator final : public TextGenerator {
public:
  explicit HttpGenerator(const ProviderConfig& config);
  ~HttpGenerator() override;
  std::vector<std::string> generate(const GenerationRequest& req) override;
  std::string fingerprint() const override;

private:
  std::unique_ptr<HttpChannel> channel_;
};

class HttpEmbedder final : public Embedder {
public:
  explicit HttpEmbedder(const ProviderConfig& config);
  ~HttpEmbedder() override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::string fingerprint() const override;

private:
  std::unique_ptr<HttpChannel> channel_;
};

class HttpNliScorer final : public NliScorer {
public:
  explicit HttpNliScorer(const ProviderConfig& config);
  ~HttpNliScorer() override;
  NliDistribution score(const std::string& premise, const std::string& hypothesis) override;
  std::string fingerprint() const override;

private:
  std::unique_ptr<HttpChannel> channel_;
};

class HttpSafetyScorer final : public SafetyScorer {
public:
  explicit HttpSafetyScorer(const ProviderConfig& config);
  ~HttpSafetyScorer() override;
  SafetyScore moderate(const std::string& text) override;
  std::string fingerprint() const override;

private:
  std::unique_ptr<HttpChannel> channel_;
};

}  // namespace udasa
