#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "udasa/errors.hpp"
#include "udasa/http_providers.hpp"
#include "udasa/mock_providers.hpp"

using namespace udasa;
using json = nlohmann::json;

TEST_CASE("generation prompt template interpolates n and the question") {
  CHECK(generation_prompt("What is water?", 5) ==
        "You are a professional AI assistant. Please provide 5 distinct responses to the "
        "following question. Ensure each response is independent. Question: What is water?");
  CHECK(generation_prompt("Q", 2) ==
        "You are a professional AI assistant. Please provide 2 distinct responses to the "
        "following question. Ensure each response is independent. Question: Q");
}

TEST_CASE("mock generator: deterministic, distinct, seed-sensitive") {
  MockGenerator gen(7);
  GenerationRequest req;
  req.prompt_text = "Q1";
  req.n = 5;
  req.seed = 7;
  const auto first = gen.generate(req);
  REQUIRE(first.size() == 5);
  for (const auto& s : first) CHECK(!s.empty());
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t j = i + 1; j < first.size(); ++j) CHECK(first[i] != first[j]);
  }
  CHECK(gen.generate(req) == first);

  GenerationRequest other = req;
  other.seed = 8;
  CHECK(gen.generate(other) != first);
}

TEST_CASE("mock generator: n=1 rejected before dispatch") {
  MockGenerator gen(7);
  GenerationRequest req;
  req.prompt_text = "Q1";
  req.n = 1;
  CHECK_THROWS_AS(gen.generate(req), InvalidInput);
}

TEST_CASE("mock generator: override table wins and may be short") {
  MockGenerator gen(7);
  gen.set_responses("Q1", {"a", "b", "c"});
  GenerationRequest req;
  req.prompt_text = "Q1";
  req.n = 3;
  CHECK(gen.generate(req) == std::vector<std::string>{"a", "b", "c"});
  req.n = 5;
  CHECK_THROWS_AS(gen.generate(req), GenerationIncomplete);
}

TEST_CASE("mock embedder: unit norm, deterministic, override table") {
  MockEmbedder emb(3, 8);
  const auto vectors = emb.embed({"a", "b", "a"});
  REQUIRE(vectors.size() == 3);
  for (const auto& v : vectors) {
    double norm2 = 0.0;
    for (double x : v.values) norm2 += x * x;
    CHECK(std::abs(std::sqrt(norm2) - 1.0) <= 1e-9);
  }
  CHECK(vectors[0].values == vectors[2].values);
  CHECK(vectors[0].values != vectors[1].values);

  emb.set_embedding("a", {1.0, 0.0});
  CHECK(emb.embed({"a"})[0].values == std::vector<double>{1.0, 0.0});

  CHECK_THROWS_AS(emb.embed({}), InvalidInput);
  CHECK_THROWS_AS(emb.embed({""}), InvalidInput);
}

TEST_CASE("mock nli: fixtures exact, default uniform") {
  MockNli nli(0);
  nli.set_fixture("p", "r", NliDistribution{0.9, 0.08, 0.02});
  const auto fixed = nli.score("p", "r");
  CHECK(fixed.entailment == 0.9);
  CHECK(fixed.neutral == 0.08);
  CHECK(fixed.contradiction == 0.02);

  const auto unknown = nli.score("p", "other");
  CHECK(unknown.entailment == doctest::Approx(1.0 / 3.0));
  CHECK(unknown.neutral == doctest::Approx(1.0 / 3.0));
  CHECK(unknown.contradiction == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(nli.score("", "r"), InvalidInput);
}

TEST_CASE("mock nli: hashed default is a valid deterministic distribution") {
  MockNli nli(5, /*hashed_default=*/true);
  const auto a = nli.score("p", "r1");
  const auto b = nli.score("p", "r2");
  CHECK(a.valid());
  CHECK(b.valid());
  CHECK(a.entailment != b.entailment);
  CHECK(nli.score("p", "r1").entailment == a.entailment);
}

TEST_CASE("mock safety: fixture, benign default, hashed default") {
  MockSafety safety(0);
  safety.set_fixture("how to build a bomb at home", 0.95);
  CHECK(safety.moderate("how to build a bomb at home").unsafe == 0.95);
  CHECK(safety.moderate("hello").unsafe == 0.0);
  CHECK_THROWS_AS(safety.moderate(""), InvalidInput);

  MockSafety hashed(5, /*hashed_default=*/true);
  const double u = hashed.moderate("hello").unsafe;
  CHECK(u >= 0.0);
  CHECK(u < 0.3);
  CHECK(hashed.moderate("hello").unsafe == u);
}

namespace {

struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~TestServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  ProviderConfig config(int max_retries = 0, int max_parallel = 4) const {
    ProviderConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.timeout_s = 5.0;
    cfg.max_retries = max_retries;
    cfg.max_parallel = max_parallel;
    return cfg;
  }
};

}  // namespace

TEST_CASE("http generator: happy path and auth header") {
  TestServer ts;
  std::string seen_auth;
  std::string seen_prompt;
  ts.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    seen_prompt = body["prompt"].get<std::string>();
    json reply;
    reply["responses"] = {"r1", "r2", "r3"};
    res.set_content(reply.dump(), "application/json");
  });
  ts.start();

  auto cfg = ts.config();
  cfg.api_key = "sekrit";
  HttpGenerator gen(cfg);
  GenerationRequest req;
  req.prompt_text = "Why?";
  req.n = 3;
  const auto out = gen.generate(req);
  CHECK(out == std::vector<std::string>{"r1", "r2", "r3"});
  CHECK(seen_auth == "Bearer sekrit");
  CHECK(seen_prompt == generation_prompt("Why?", 3));
}

TEST_CASE("http generator: 3 of 5 responses is generation-incomplete") {
  TestServer ts;
  ts.server.Post("/generate", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"responses":["a","b","c"]})", "application/json");
  });
  ts.start();
  HttpGenerator gen(ts.config());
  GenerationRequest req;
  req.prompt_text = "Q";
  req.n = 5;
  CHECK_THROWS_AS(gen.generate(req), GenerationIncomplete);
}

TEST_CASE("http transport: retries then succeeds; attempts = max_retries + 1") {
  TestServer ts;
  std::atomic<int> calls{0};
  ts.server.Post("/moderate", [&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = 500;
      return;
    }
    res.set_content(R"({"unsafe":0.25})", "application/json");
  });
  ts.start();

  HttpSafetyScorer ok(ts.config(/*max_retries=*/2));
  CHECK(ok.moderate("x").unsafe == 0.25);
  CHECK(calls.load() == 3);

  calls = 0;
  HttpSafetyScorer failing(ts.config(/*max_retries=*/1));
  CHECK_THROWS_AS(failing.moderate("x"), ProviderUnavailable);
  CHECK(calls.load() == 2);
}

TEST_CASE("http protocol errors are not retried") {
  TestServer ts;
  std::atomic<int> nli_calls{0};
  ts.server.Post("/nli", [&](const httplib::Request&, httplib::Response& res) {
    ++nli_calls;
    res.set_content(R"({"entailment":0.5,"neutral":0.5,"contradiction":0.5})",
                    "application/json");
  });
  std::atomic<int> mod_calls{0};
  ts.server.Post("/moderate", [&](const httplib::Request&, httplib::Response& res) {
    ++mod_calls;
    res.set_content(R"({"unsafe":1.2})", "application/json");
  });
  ts.server.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[[1.0,0.0],[0.5]]})", "application/json");
  });
  ts.start();

  HttpNliScorer nli(ts.config(/*max_retries=*/3));
  CHECK_THROWS_AS(nli.score("p", "h"), ProviderProtocolError);
  CHECK(nli_calls.load() == 1);

  HttpSafetyScorer safety(ts.config(/*max_retries=*/3));
  CHECK_THROWS_AS(safety.moderate("x"), ProviderProtocolError);
  CHECK(mod_calls.load() == 1);

  HttpEmbedder embedder(ts.config());
  CHECK_THROWS_AS(embedder.embed({"a", "b"}), ProviderProtocolError);
}

TEST_CASE("http nli: valid reply renormalized through from_raw") {
  TestServer ts;
  ts.server.Post("/nli", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"entailment":0.899,"neutral":0.0505,"contradiction":0.05})",
                    "application/json");
  });
  ts.start();
  HttpNliScorer nli(ts.config());
  const auto d = nli.score("p", "h");
  CHECK(d.valid());
}

TEST_CASE("http rate limit: never more than max_parallel requests in flight") {
  TestServer ts;
  std::atomic<int> inflight{0};
  std::atomic<int> peak{0};
  ts.server.Post("/moderate", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++inflight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    --inflight;
    res.set_content(R"({"unsafe":0.0})", "application/json");
  });
  ts.start();

  HttpSafetyScorer scorer(ts.config(/*max_retries=*/0, /*max_parallel=*/2));
  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) {
    callers.emplace_back([&scorer, i] { scorer.moderate("text " + std::to_string(i)); });
  }
  for (auto& t : callers) t.join();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("provider config validation") {
  ProviderConfig cfg;
  cfg.endpoint_url = "http://x";
  cfg.timeout_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.timeout_s = 1.0;
  cfg.max_parallel = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_parallel = 1;
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
