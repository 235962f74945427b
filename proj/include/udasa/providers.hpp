#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "udasa/uncertainty.hpp"

namespace udasa {

// Connection settings for one HTTP capability endpoint.
struct ProviderConfig {
  std::string endpoint_url;
  std::optional<std::string> api_key;  // resolved from an env var by the config loader
  double timeout_s = 30.0;
  int max_retries = 2;
  int max_parallel = 4;

  void validate() const;
};

struct GenerationRequest {
  std::string prompt_text;  // the raw question; the provider applies the template
  int n = 5;
  double temperature = 0.7;
  std::optional<std::int64_t> seed;

  void validate() const;  // pair construction needs n >= 2
};

// Exact outgoing prompt: the question wrapped in the fixed instruction
// template, with the response count interpolated.
std::string generation_prompt(const std::string& question, int n);

class TextGenerator {
public:
  virtual ~TextGenerator() = default;
  virtual std::vector<std::string> generate(const GenerationRequest& req) = 0;
  virtual std::string fingerprint() const = 0;
};

class Embedder {
public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string fingerprint() const = 0;
};

class NliScorer {
public:
  virtual ~NliScorer() = default;
  virtual NliDistribution score(const std::string& premise, const std::string& hypothesis) = 0;
  virtual std::string fingerprint() const = 0;
};

class SafetyScorer {
public:
  virtual ~SafetyScorer() = default;
  virtual SafetyScore moderate(const std::string& text) = 0;
  virtual std::string fingerprint() const = 0;
};

// The four capabilities the pipeline consumes.
struct ProviderSet {
  std::shared_ptr<TextGenerator> generator;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<NliScorer> nli;
  std::shared_ptr<SafetyScorer> safety;
};

}  // namespace udasa
