#include "udasa/run_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "udasa/errors.hpp"
#include "udasa/http_providers.hpp"
#include "udasa/mock_providers.hpp"
#include "udasa/rng.hpp"

namespace udasa {

namespace {

void check_keys(const ojson& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + where + key + "'");
  }
}

double get_number(const ojson& obj, const std::string& key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError("config key '" + where + key + "' must be a number");
  return obj[key].get<double>();
}

int get_int(const ojson& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ConfigError("config key '" + where + key + "' must be an integer");
  return obj[key].get<int>();
}

bool get_bool(const ojson& obj, const std::string& key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ConfigError("config key '" + where + key + "' must be a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const ojson& obj, const std::string& key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError("config key '" + where + key + "' must be a string");
  return obj[key].get<std::string>();
}

ProviderConfig parse_provider(const ojson& obj, const std::string& where) {
  check_keys(obj, where,
             {"endpoint_url", "api_key_env", "timeout_s", "max_retries", "max_parallel"});
  ProviderConfig cfg;
  cfg.endpoint_url = get_string(obj, "endpoint_url", "", where);
  if (cfg.endpoint_url.empty())
    throw ConfigError("config key '" + where + "endpoint_url' is required");
  const std::string env_name = get_string(obj, "api_key_env", "", where);
  if (!env_name.empty()) {
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0')
      throw ConfigError("environment variable " + env_name + " (from '" + where +
                        "api_key_env') is not set");
    cfg.api_key = std::string(value);
  }
  cfg.timeout_s = get_number(obj, "timeout_s", cfg.timeout_s, where);
  cfg.max_retries = get_int(obj, "max_retries", cfg.max_retries, where);
  cfg.max_parallel = get_int(obj, "max_parallel", cfg.max_parallel, where);
  cfg.validate();
  return cfg;
}

}  // namespace

void RunConfig::validate() const {
  if (n_responses < 2) throw ConfigError("n_responses must be >= 2");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  curriculum.validate();
  trainer.validate();
  if (plan.batch_size < 1) throw ConfigError("plan batch_size must be >= 1");
  if (plan.warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (plan.step_cap < 1) throw ConfigError("step_cap must be >= 1");
  if (!(plan.lr_first_stage > 0.0) || !(plan.lr_later_stages > 0.0))
    throw ConfigError("learning rates must be > 0");
  if (plan.kl_coefficient < 0.0) throw ConfigError("kl_coefficient must be >= 0");
  if (!(plan.decay_fraction > 0.0 && plan.decay_fraction <= 1.0))
    throw ConfigError("decay_fraction must be in (0,1]");
  if (!mock_providers) {
    generate_provider.validate();
    embed_provider.validate();
    nli_provider.validate();
    moderate_provider.validate();
  }
}

ojson RunConfig::resolved() const {
  ojson j;
  j["run_dir"] = run_dir.string();
  j["seed"] = seed;
  j["n_responses"] = n_responses;
  j["temperature"] = temperature;
  j["workers"] = workers;
  if (mock_providers) {
    j["providers"] = "mock";
    j["mock_embedding_dim"] = mock_embedding_dim;
  } else {
    auto provider_json = [](const ProviderConfig& p) {
      ojson o;
      o["endpoint_url"] = p.endpoint_url;
      o["has_api_key"] = p.api_key.has_value();  // never the secret itself
      o["timeout_s"] = p.timeout_s;
      o["max_retries"] = p.max_retries;
      o["max_parallel"] = p.max_parallel;
      return o;
    };
    j["providers"] = ojson{{"generate", provider_json(generate_provider)},
                           {"embed", provider_json(embed_provider)},
                           {"nli", provider_json(nli_provider)},
                           {"moderate", provider_json(moderate_provider)}};
  }
  j["curriculum"] = ojson{{"tau1", curriculum.tau1}, {"tau2", curriculum.tau2}};
  j["plan"] = ojson{{"batch_size", plan.batch_size},
                    {"warmup_steps", plan.warmup_steps},
                    {"step_cap", plan.step_cap},
                    {"lr_first_stage", plan.lr_first_stage},
                    {"lr_later_stages", plan.lr_later_stages},
                    {"kl_coefficient", plan.kl_coefficient},
                    {"early_stop_patience", plan.early_stop_patience},
                    {"decay_fraction", plan.decay_fraction}};
  j["trainer"] = ojson{{"beta", trainer.beta},
                       {"batch_size", trainer.batch_size},
                       {"eval_fraction", trainer.eval_fraction},
                       {"eval_interval", trainer.eval_interval},
                       {"refreeze_per_stage", trainer.refreeze_per_stage}};
  j["pairs"] = ojson{{"allow_tied_rejected", pairs.allow_tied_rejected}};
  j["external_command"] = external_command ? ojson(*external_command) : ojson(nullptr);
  return j;
}

std::string RunConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved().dump())));
  return std::string(buf);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot open config file " + path.string());
  ojson doc;
  try {
    doc = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file " + path.string() + " must be a JSON object");

  check_keys(doc, "",
             {"run_dir", "seed", "n_responses", "temperature", "workers", "providers",
              "mock_embedding_dim", "curriculum", "plan", "trainer", "pairs",
              "external_command"});

  RunConfig cfg;
  cfg.run_dir = get_string(doc, "run_dir", "", "");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw ConfigError("config key 'seed' must be an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  cfg.n_responses = get_int(doc, "n_responses", cfg.n_responses, "");
  cfg.temperature = get_number(doc, "temperature", cfg.temperature, "");
  cfg.workers = get_int(doc, "workers", cfg.workers, "");
  cfg.mock_embedding_dim =
      static_cast<std::size_t>(get_int(doc, "mock_embedding_dim", 8, ""));

  if (doc.contains("providers")) {
    const auto& providers = doc["providers"];
    if (providers.is_string() && providers.get<std::string>() == "mock") {
      cfg.mock_providers = true;
    } else if (providers.is_object()) {
      check_keys(providers, "providers.", {"generate", "embed", "nli", "moderate"});
      for (const char* key : {"generate", "embed", "nli", "moderate"}) {
        if (!providers.contains(key))
          throw ConfigError(std::string("config key 'providers.") + key + "' is required");
      }
      cfg.mock_providers = false;
      cfg.generate_provider = parse_provider(providers["generate"], "providers.generate.");
      cfg.embed_provider = parse_provider(providers["embed"], "providers.embed.");
      cfg.nli_provider = parse_provider(providers["nli"], "providers.nli.");
      cfg.moderate_provider = parse_provider(providers["moderate"], "providers.moderate.");
    } else {
      throw ConfigError("config key 'providers' must be \"mock\" or an object");
    }
  }

  if (doc.contains("curriculum")) {
    const auto& c = doc["curriculum"];
    check_keys(c, "curriculum.", {"tau1", "tau2"});
    cfg.curriculum.tau1 = get_number(c, "tau1", cfg.curriculum.tau1, "curriculum.");
    cfg.curriculum.tau2 = get_number(c, "tau2", cfg.curriculum.tau2, "curriculum.");
  }

  if (doc.contains("plan")) {
    const auto& p = doc["plan"];
    check_keys(p, "plan.",
               {"warmup_steps", "step_cap", "lr_first_stage", "lr_later_stages",
                "kl_coefficient", "early_stop_patience", "decay_fraction"});
    cfg.plan.warmup_steps = get_int(p, "warmup_steps", cfg.plan.warmup_steps, "plan.");
    cfg.plan.step_cap = get_int(p, "step_cap", cfg.plan.step_cap, "plan.");
    cfg.plan.lr_first_stage = get_number(p, "lr_first_stage", cfg.plan.lr_first_stage, "plan.");
    cfg.plan.lr_later_stages =
        get_number(p, "lr_later_stages", cfg.plan.lr_later_stages, "plan.");
    cfg.plan.kl_coefficient = get_number(p, "kl_coefficient", cfg.plan.kl_coefficient, "plan.");
    cfg.plan.early_stop_patience =
        get_int(p, "early_stop_patience", cfg.plan.early_stop_patience, "plan.");
    cfg.plan.decay_fraction = get_number(p, "decay_fraction", cfg.plan.decay_fraction, "plan.");
  }

  if (doc.contains("trainer")) {
    const auto& t = doc["trainer"];
    check_keys(t, "trainer.",
               {"beta", "batch_size", "eval_fraction", "eval_interval", "refreeze_per_stage"});
    cfg.trainer.beta = get_number(t, "beta", cfg.trainer.beta, "trainer.");
    cfg.trainer.batch_size = get_int(t, "batch_size", cfg.trainer.batch_size, "trainer.");
    cfg.trainer.eval_fraction =
        get_number(t, "eval_fraction", cfg.trainer.eval_fraction, "trainer.");
    cfg.trainer.eval_interval = get_int(t, "eval_interval", cfg.trainer.eval_interval, "trainer.");
    cfg.trainer.refreeze_per_stage =
        get_bool(t, "refreeze_per_stage", cfg.trainer.refreeze_per_stage, "trainer.");
  }

  if (doc.contains("pairs")) {
    const auto& p = doc["pairs"];
    check_keys(p, "pairs.", {"allow_tied_rejected"});
    cfg.pairs.allow_tied_rejected =
        get_bool(p, "allow_tied_rejected", cfg.pairs.allow_tied_rejected, "pairs.");
  }

  if (doc.contains("external_command") && !doc["external_command"].is_null()) {
    if (!doc["external_command"].is_string())
      throw ConfigError("config key 'external_command' must be a string or null");
    cfg.external_command = doc["external_command"].get<std::string>();
  }

  // The trainer's batch size also drives the plan's epoch caps.
  cfg.plan.batch_size = cfg.trainer.batch_size;
  return cfg;
}

ProviderSet make_providers(const RunConfig& config) {
  if (config.mock_providers)
    return make_mock_providers(config.seed, config.mock_embedding_dim);
  ProviderSet set;
  set.generator = std::make_shared<HttpGenerator>(config.generate_provider);
  set.embedder = std::make_shared<HttpEmbedder>(config.embed_provider);
  set.nli = std::make_shared<HttpNliScorer>(config.nli_provider);
  set.safety = std::make_shared<HttpSafetyScorer>(config.moderate_provider);
  return set;
}

}  // namespace udasa
