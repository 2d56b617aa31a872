#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace syllogic {

// Base for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad invocation: misconfigured paths, unknown languages, missing env vars.
struct ConfigError : Error {
  using Error::Error;
};

// Caller broke a documented precondition.
struct ContractError : Error {
  using Error::Error;
};

// Data failed validation. Carries every violation found, not just the first.
struct ValidationError : Error {
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), issues(std::move(problems)) {}
  explicit ValidationError(std::string problem)
      : ValidationError(std::vector<std::string>{std::move(problem)}) {}

  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "\n";
      out += s;
    }
    return out;
  }
};

// Malformed persisted file; message names line and field where known.
struct SchemaError : Error {
  using Error::Error;
};

// Requested more distinct examples than the vocabulary can produce.
struct ExhaustionError : Error {
  using Error::Error;
};

// Transport or protocol failure talking to an endpoint. Carries the cache
// key of the offending request so failures can be correlated with the cache.
struct GatewayError : Error {
  GatewayError(const std::string& message, std::string key)
      : Error(message + " [request " + key + "]"), request_key(std::move(key)) {}

  std::string request_key;
};

}  // namespace syllogic
