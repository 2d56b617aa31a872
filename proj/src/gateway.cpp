#include "syllogic/gateway.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <semaphore>
#include <sstream>

#include <json.hpp>

#include "syllogic/hash.hpp"
#include "syllogic/http_json.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

constexpr char kSep = '\x1f';

std::string shortest_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct SlotGuard {
  std::counting_semaphore<>& sem;
  explicit SlotGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

json parse_response(const std::string& raw, const std::string& key) {
  try {
    return json::parse(raw);
  } catch (const json::exception& e) {
    throw GatewayError(std::string("response body is not JSON: ") + e.what(), key);
  }
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(dir_ / key, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ResponseCache::put(const std::string& key, const std::string& raw_body) const {
  namespace fs = std::filesystem;
  const fs::path target = dir_ / key;
  if (fs::exists(target)) return;  // first write wins
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp =
      dir_ / (key + ".tmp." + std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write cache entry " + tmp.string());
    out << raw_body;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("write failed for cache entry " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    if (!fs::exists(target)) {
      throw ConfigError("cannot publish cache entry " + target.string());
    }
  }
}

std::string chat_cache_key(const std::string& endpoint_url, const std::string& model,
                           const DecodingConfig& decoding, const std::string& prompt) {
  std::string material = "chat";
  for (const std::string& part :
       {endpoint_url, model, shortest_double(decoding.temperature),
        std::to_string(decoding.max_new_tokens), prompt}) {
    material += kSep;
    material += part;
  }
  return sha256_hex(material);
}

std::string embed_cache_key(const std::string& endpoint_url, const std::string& model,
                            const std::string& input) {
  std::string material = "embed";
  for (const std::string& part : {endpoint_url, model, input}) {
    material += kSep;
    material += part;
  }
  return sha256_hex(material);
}

struct Gateway::Slots {
  std::counting_semaphore<> sem;
  explicit Slots(std::ptrdiff_t n) : sem(n) {}
};

Gateway::Gateway(GatewayConfig config)
    : config_(std::move(config)), cache_(config_.cache_dir), slots_(nullptr) {
  if (config_.endpoint_url.empty()) throw ConfigError("gateway endpoint_url is empty");
  if (config_.model.empty()) throw ConfigError("gateway model id is empty");
  if (config_.parallelism < 1) {
    throw ConfigError("parallelism must be at least 1, got " +
                      std::to_string(config_.parallelism));
  }
  if (config_.retries < 1) {
    throw ConfigError("retries must be at least 1, got " + std::to_string(config_.retries));
  }
  if (!config_.api_key_env.empty()) {
    const char* value = std::getenv(config_.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
      throw ConfigError("environment variable " + config_.api_key_env +
                        " is not set (it should hold the API key)");
    }
    api_key_ = value;
  }
  slots_ = new Slots(config_.parallelism);
}

Gateway::~Gateway() { delete slots_; }

ChatResult Gateway::chat(const std::string& prompt, const DecodingConfig& decoding) const {
  if (prompt.empty()) throw ContractError("chat prompt must be nonempty");
  if (decoding.temperature < 0.0) throw ContractError("temperature must be nonnegative");
  if (decoding.max_new_tokens < 1) throw ContractError("max_new_tokens must be positive");

  const std::string key =
      chat_cache_key(config_.endpoint_url, config_.model, decoding, prompt);
  bool from_cache = true;
  std::optional<std::string> raw = cache_.get(key);
  if (!raw) {
    from_cache = false;
    const json body{{"model", config_.model},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                    {"temperature", decoding.temperature},
                    {"max_tokens", decoding.max_new_tokens}};
    SlotGuard guard(slots_->sem);
    const json response = post_json(config_.endpoint_url, "/v1/chat/completions", body,
                                    api_key_.empty()
                                        ? std::map<std::string, std::string>{}
                                        : std::map<std::string, std::string>{
                                              {"Authorization", "Bearer " + api_key_}},
                                    config_.retries, config_.backoff_base_ms, key);
    raw = response.dump();
    cache_.put(key, *raw);
  }

  const json response = parse_response(*raw, key);
  if (!response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw GatewayError("response has no choices", key);
  }
  const json& first = response["choices"].at(0);
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw GatewayError("response choice carries no message content", key);
  }
  return ChatResult{first["message"]["content"].get<std::string>(), from_cache};
}

EmbedResult Gateway::embed(const std::string& input) const {
  if (input.empty()) throw ContractError("embedding input must be nonempty");

  const std::string key = embed_cache_key(config_.endpoint_url, config_.model, input);
  bool from_cache = true;
  std::optional<std::string> raw = cache_.get(key);
  if (!raw) {
    from_cache = false;
    const json body{{"model", config_.model}, {"input", input}};
    SlotGuard guard(slots_->sem);
    const json response = post_json(config_.endpoint_url, "/v1/embeddings", body,
                                    api_key_.empty()
                                        ? std::map<std::string, std::string>{}
                                        : std::map<std::string, std::string>{
                                              {"Authorization", "Bearer " + api_key_}},
                                    config_.retries, config_.backoff_base_ms, key);
    raw = response.dump();
    cache_.put(key, *raw);
  }

  const json response = parse_response(*raw, key);
  if (!response.contains("data") || !response["data"].is_array() ||
      response["data"].empty()) {
    throw GatewayError("embedding response has no data", key);
  }
  const json& entry = response["data"].at(0);
  if (!entry.contains("embedding") || !entry["embedding"].is_array() ||
      entry["embedding"].empty()) {
    throw GatewayError("embedding response carries no vector", key);
  }
  EmbedResult result;
  result.from_cache = from_cache;
  result.vector.reserve(entry["embedding"].size());
  for (const json& component : entry["embedding"]) {
    if (!component.is_number()) {
      throw GatewayError("embedding vector holds a non-numeric component", key);
    }
    result.vector.push_back(component.get<double>());
  }
  return result;
}

EmbedBatch Gateway::embed_batch(const std::vector<std::string>& inputs) const {
  if (inputs.empty()) throw ContractError("embedding batch must be nonempty");
  EmbedBatch batch;
  batch.vectors.reserve(inputs.size());
  for (const std::string& input : inputs) {
    EmbedResult one = embed(input);
    if (!batch.vectors.empty() && one.vector.size() != batch.vectors.front().size()) {
      throw GatewayError(
          "embedding dimension mismatch within a batch: " +
              std::to_string(batch.vectors.front().size()) + " then " +
              std::to_string(one.vector.size()),
          embed_cache_key(config_.endpoint_url, config_.model, input));
    }
    if (one.from_cache) ++batch.cached;
    batch.vectors.push_back(std::move(one.vector));
  }
  return batch;
}

}  // namespace syllogic
