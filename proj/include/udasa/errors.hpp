#pragma once

#include <stdexcept>
#include <string>

namespace udasa {

// Error taxonomy shared across the pipeline. Callers catch by type; the CLI
// maps ConfigError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated a precondition (bad dimension, out-of-range probability, ...).
class InvalidInput : public Error {
public:
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// Transport-level provider failure that persisted through the retry budget.
class ProviderUnavailable : public Error {
public:
  explicit ProviderUnavailable(const std::string& msg) : Error(msg) {}
};

// Provider answered, but the payload violates the wire contract.
class ProviderProtocolError : public Error {
public:
  explicit ProviderProtocolError(const std::string& msg) : Error(msg) {}
};

// Generation returned fewer usable responses than requested.
class GenerationIncomplete : public Error {
public:
  explicit GenerationIncomplete(const std::string& msg) : Error(msg) {}
};

// Bad run configuration or command-line usage.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Externally invoked trainer command exited non-zero.
class ExternalCommandError : public Error {
public:
  ExternalCommandError(const std::string& msg, int stage) : Error(msg), stage_index(stage) {}
  int stage_index;
};

}  // namespace udasa
