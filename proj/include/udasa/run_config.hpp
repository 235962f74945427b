#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "udasa/curriculum.hpp"
#include "udasa/preference.hpp"
#include "udasa/providers.hpp"
#include "udasa/trainer.hpp"

namespace udasa {

// One structured config document drives a whole run; every key is validated
// against the schema in the README (unknown keys are errors) and any CLI flag
// overrides the file.
struct RunConfig {
  std::filesystem::path run_dir;
  std::uint64_t seed = 0;
  int n_responses = 5;
  double temperature = 0.7;
  int workers = 1;

  bool mock_providers = true;
  std::size_t mock_embedding_dim = 8;
  ProviderConfig generate_provider;
  ProviderConfig embed_provider;
  ProviderConfig nli_provider;
  ProviderConfig moderate_provider;

  CurriculumConfig curriculum;
  PlanOptions plan;
  TrainerConfig trainer;
  PairOptions pairs;

  std::optional<std::string> external_command;

  void validate() const;

  // Canonical resolved form; its FNV-1a hash is printed by every command so
  // equal hashes imply equal artifacts.
  ojson resolved() const;
  std::string config_hash() const;
};

// Loads and validates the JSON config document.
RunConfig load_run_config(const std::filesystem::path& path);

// Providers per config: mocks seeded from the run seed, or HTTP clients.
ProviderSet make_providers(const RunConfig& config);

}  // namespace udasa
