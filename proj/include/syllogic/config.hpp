#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "syllogic/logic.hpp"

namespace syllogic {

struct EndpointConfig {
  std::string endpoint_url;
  std::string model;
  std::string api_key_env;
};

// Everything a subcommand needs, merged from defaults, the JSON config
// file, and explicit flags (in that order of precedence).
struct Config {
  std::filesystem::path lexicon_path;
  std::string templates = "builtin";  // "builtin" or a path to a template file
  std::vector<std::string> languages;
  std::uint64_t count = 999;
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::string parsing_mode = "strict";
  int parallelism = 4;
  int retries = 3;
  int backoff_ms = 100;
  std::filesystem::path cache_dir;  // empty = out_dir / "cache"
  EndpointConfig chat;
  EndpointConfig embeddings;

  std::filesystem::path effective_cache_dir() const {
    return cache_dir.empty() ? out_dir / "cache" : cache_dir;
  }
};

// Parses a JSON config file. Unknown keys are rejected so typos fail loudly.
Config load_config(const std::filesystem::path& path);

// "builtin" or a template file path.
std::vector<Template> resolve_templates(const std::string& templates_spec);

}  // namespace syllogic
