#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace udasa {

// All persisted JSON uses ordered_json so field order (and therefore the
// byte stream) is reproducible across runs.
using ojson = nlohmann::ordered_json;

namespace jsonl {

// Parses every non-empty line; throws InvalidInput with the 1-based line
// number on malformed JSON.
std::vector<ojson> load(const std::filesystem::path& path);

// True if the file exists and has at least one non-empty line.
bool nonempty(const std::filesystem::path& path);

void write_all(const std::filesystem::path& path, const std::vector<ojson>& records);

void append_all(const std::filesystem::path& path, const std::vector<ojson>& records);

}  // namespace jsonl

// Shortest round-trip decimal form of a double (what nlohmann uses for JSON
// numbers), exposed for CSV and policy-file serialization.
std::string format_double(double v);

}  // namespace udasa
