#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "syllogic/errors.hpp"

namespace syllogic {

struct DecodingConfig {
  double temperature = 0.0;
  int max_new_tokens = 10;

  bool operator==(const DecodingConfig&) const = default;
};

// Immutable on-disk store: one file per key, holding the raw response body.
// Writes go through a temp file and an atomic rename, and an existing entry
// is never replaced, so a crashed run cannot leave a truncated entry and a
// reread always sees what the first writer stored.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& raw_body) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct GatewayConfig {
  std::string endpoint_url;
  std::string model;
  std::string api_key_env;  // name of the env var holding the key, "" = none
  int parallelism = 4;
  int retries = 3;  // total attempts per request
  int backoff_base_ms = 100;
  std::filesystem::path cache_dir;
};

struct ChatResult {
  std::string text;
  bool from_cache = false;
};

struct EmbedResult {
  std::vector<double> vector;
  bool from_cache = false;
};

struct EmbedBatch {
  std::vector<std::vector<double>> vectors;  // one per input, uniform dimension
  std::size_t cached = 0;
};

// Deterministic keys over everything that identifies a request, so a cache
// survives process restarts and distinguishes endpoints, models and
// decoding settings.
std::string chat_cache_key(const std::string& endpoint_url, const std::string& model,
                           const DecodingConfig& decoding, const std::string& prompt);
std::string embed_cache_key(const std::string& endpoint_url, const std::string& model,
                            const std::string& input);

// Client for chat-completions style endpoints. Thread safe; at most
// `parallelism` requests are in flight at once. Every network response is
// cached before it is returned, so identical requests never hit the wire
// twice.
class Gateway {
 public:
  explicit Gateway(GatewayConfig config);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  ChatResult chat(const std::string& prompt, const DecodingConfig& decoding) const;
  EmbedResult embed(const std::string& input) const;
  EmbedBatch embed_batch(const std::vector<std::string>& inputs) const;

  const GatewayConfig& config() const { return config_; }
  const ResponseCache& cache() const { return cache_; }

 private:
  struct Slots;

  GatewayConfig config_;
  std::string api_key_;
  ResponseCache cache_;
  Slots* slots_;
};

}  // namespace syllogic
