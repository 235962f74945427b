#include "udasa/providers.hpp"

#include <cmath>

#include "udasa/errors.hpp"

namespace udasa {

void ProviderConfig::validate() const {
  if (endpoint_url.empty()) throw ConfigError("provider endpoint_url is empty");
  if (!(timeout_s > 0.0)) throw ConfigError("provider timeout must be > 0");
  if (max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
  if (max_parallel < 1) throw ConfigError("provider max_parallel must be >= 1");
}

void GenerationRequest::validate() const {
  if (prompt_text.empty()) throw InvalidInput("generation prompt is empty");
  if (n < 2) throw InvalidInput("generation needs n >= 2, got " + std::to_string(n));
  if (!std::isfinite(temperature) || temperature < 0.0)
    throw InvalidInput("temperature must be non-negative");
}

std::string generation_prompt(const std::string& question, int n) {
  return "You are a professional AI assistant. Please provide " + std::to_string(n) +
         " distinct responses to the following question. Ensure each response is independent. "
         "Question: " +
         question;
}

}  // namespace udasa
