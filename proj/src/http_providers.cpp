#include "udasa/http_providers.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <condition_variable>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "udasa/errors.hpp"

namespace udasa {

using json = nlohmann::json;

namespace {

// Semaphore with a runtime-configured limit.
class InflightLimiter {
public:
  explicit InflightLimiter(int limit) : available_(limit) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

struct LimiterGuard {
  explicit LimiterGuard(InflightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~LimiterGuard() { limiter.release(); }
  InflightLimiter& limiter;
};

}  // namespace

class HttpChannel {
public:
  explicit HttpChannel(const ProviderConfig& config)
      : config_(config), limiter_(config.max_parallel) {
    config_.validate();
  }

  json post(const std::string& path, const json& body) {
    LimiterGuard guard(limiter_);
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) backoff(attempt);
      httplib::Client client(config_.endpoint_url);
      const auto timeout = std::chrono::duration<double>(config_.timeout_s);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
      httplib::Headers headers;
      if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);
      auto res = client.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw ProviderProtocolError(config_.endpoint_url + path + " returned status " +
                                    std::to_string(res->status));
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw ProviderProtocolError(config_.endpoint_url + path + " returned invalid JSON: " +
                                    e.what());
      }
    }
    throw ProviderUnavailable(config_.endpoint_url + path + " unavailable after " +
                              std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
  }

  const ProviderConfig& config() const { return config_; }

private:
  void backoff(int attempt) {
    const double delay_s = std::min(0.05 * std::pow(2.0, attempt - 1), 2.0);
    std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
  }

  ProviderConfig config_;
  InflightLimiter limiter_;
};

HttpGenerator::HttpGenerator(const ProviderConfig& config)
    : channel_(std::make_unique<HttpChannel>(config)) {}
HttpGenerator::~HttpGenerator() = default;

std::vector<std::string> HttpGenerator::generate(const GenerationRequest& req) {
  req.validate();
  json body = {{"prompt", generation_prompt(req.prompt_text, req.n)},
               {"n", req.n},
               {"temperature", req.temperature}};
  if (req.seed) body["seed"] = *req.seed;
  const json reply = channel_->post("/generate", body);
  if (!reply.contains("responses") || !reply["responses"].is_array())
    throw ProviderProtocolError("/generate reply missing responses array");
  std::vector<std::string> out;
  for (const auto& r : reply["responses"]) {
    if (!r.is_string()) throw ProviderProtocolError("/generate responses must be strings");
    const std::string s = r.get<std::string>();
    if (!s.empty()) out.push_back(s);
  }
  if (static_cast<int>(out.size()) < req.n)
    throw GenerationIncomplete("requested " + std::to_string(req.n) + " responses, got " +
                               std::to_string(out.size()) + " usable");
  if (static_cast<int>(out.size()) > req.n)
    throw ProviderProtocolError("/generate returned more responses than requested");
  return out;
}

std::string HttpGenerator::fingerprint() const {
  return "http-generator(" + channel_->config().endpoint_url + ")";
}

HttpEmbedder::HttpEmbedder(const ProviderConfig& config)
    : channel_(std::make_unique<HttpChannel>(config)) {}
HttpEmbedder::~HttpEmbedder() = default;

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw InvalidInput("embed: empty text list");
  for (const auto& t : texts) {
    if (t.empty()) throw InvalidInput("embed: empty text");
  }
  const json reply = channel_->post("/embed", json{{"texts", texts}});
  if (!reply.contains("vectors") || !reply["vectors"].is_array())
    throw ProviderProtocolError("/embed reply missing vectors array");
  const auto& vectors = reply["vectors"];
  if (vectors.size() != texts.size())
    throw ProviderProtocolError("/embed returned " + std::to_string(vectors.size()) +
                                " vectors for " + std::to_string(texts.size()) + " texts");
  std::vector<EmbeddingVector> out;
  out.reserve(vectors.size());
  std::size_t dim = 0;
  for (const auto& v : vectors) {
    if (!v.is_array() || v.empty()) throw ProviderProtocolError("/embed vector must be non-empty array");
    std::vector<double> values;
    values.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw ProviderProtocolError("/embed vector entries must be numbers");
      values.push_back(x.get<double>());
    }
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw ProviderProtocolError("/embed dimension drift within batch");
    out.push_back(EmbeddingVector{std::move(values)});
  }
  return out;
}

std::string HttpEmbedder::fingerprint() const {
  return "http-embedder(" + channel_->config().endpoint_url + ")";
}

HttpNliScorer::HttpNliScorer(const ProviderConfig& config)
    : channel_(std::make_unique<HttpChannel>(config)) {}
HttpNliScorer::~HttpNliScorer() = default;

NliDistribution HttpNliScorer::score(const std::string& premise, const std::string& hypothesis) {
  if (premise.empty() || hypothesis.empty())
    throw InvalidInput("nli: premise and hypothesis must be non-empty");
  const json reply =
      channel_->post("/nli", json{{"premise", premise}, {"hypothesis", hypothesis}});
  for (const char* key : {"entailment", "neutral", "contradiction"}) {
    if (!reply.contains(key) || !reply[key].is_number())
      throw ProviderProtocolError(std::string("/nli reply missing numeric ") + key);
  }
  try {
    return NliDistribution::from_raw(reply["entailment"].get<double>(),
                                     reply["neutral"].get<double>(),
                                     reply["contradiction"].get<double>());
  } catch (const InvalidInput& e) {
    throw ProviderProtocolError(std::string("/nli returned invalid distribution: ") + e.what());
  }
}

std::string HttpNliScorer::fingerprint() const {
  return "http-nli(" + channel_->config().endpoint_url + ")";
}

HttpSafetyScorer::HttpSafetyScorer(const ProviderConfig& config)
    : channel_(std::make_unique<HttpChannel>(config)) {}
HttpSafetyScorer::~HttpSafetyScorer() = default;

SafetyScore HttpSafetyScorer::moderate(const std::string& text) {
  if (text.empty()) throw InvalidInput("moderate: empty text");
  const json reply = channel_->post("/moderate", json{{"text", text}});
  if (!reply.contains("unsafe") || !reply["unsafe"].is_number())
    throw ProviderProtocolError("/moderate reply missing numeric unsafe");
  const double unsafe = reply["unsafe"].get<double>();
  if (!std::isfinite(unsafe) || unsafe < 0.0 || unsafe > 1.0)
    throw ProviderProtocolError("/moderate unsafety " + std::to_string(unsafe) +
                                " out of [0,1]");
  return SafetyScore{unsafe};
}

std::string HttpSafetyScorer::fingerprint() const {
  return "http-safety(" + channel_->config().endpoint_url + ")";
}

}  // namespace udasa
