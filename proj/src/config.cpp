#include "syllogic/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "syllogic/errors.hpp"

namespace syllogic {
namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& known,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("unknown config key \"" + where + key + "\"");
    }
  }
}

EndpointConfig read_endpoint(const json& j, const std::string& where) {
  check_keys(j, {"endpoint_url", "model", "api_key_env"}, where);
  EndpointConfig e;
  if (j.contains("endpoint_url")) e.endpoint_url = j.at("endpoint_url").get<std::string>();
  if (j.contains("model")) e.model = j.at("model").get<std::string>();
  if (j.contains("api_key_env")) e.api_key_env = j.at("api_key_env").get<std::string>();
  return e;
}

}  // namespace

Config load_config(const std::filesystem::path& path) {
  const json j = load_json(path, "config file");
  if (!j.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
  check_keys(j,
             {"lexicon", "templates", "languages", "count", "seed", "out_dir",
              "parsing_mode", "parallelism", "retries", "backoff_ms", "cache_dir",
              "chat", "embeddings"},
             "");
  Config c;
  try {
    if (j.contains("lexicon")) c.lexicon_path = j.at("lexicon").get<std::string>();
    if (j.contains("templates")) c.templates = j.at("templates").get<std::string>();
    if (j.contains("languages")) c.languages = j.at("languages").get<std::vector<std::string>>();
    if (j.contains("count")) c.count = j.at("count").get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("parsing_mode")) c.parsing_mode = j.at("parsing_mode").get<std::string>();
    if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
    if (j.contains("retries")) c.retries = j.at("retries").get<int>();
    if (j.contains("backoff_ms")) c.backoff_ms = j.at("backoff_ms").get<int>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    if (j.contains("chat")) c.chat = read_endpoint(j.at("chat"), "chat.");
    if (j.contains("embeddings")) {
      c.embeddings = read_endpoint(j.at("embeddings"), "embeddings.");
    }
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (c.parsing_mode != "strict" && c.parsing_mode != "lenient") {
    throw ConfigError("parsing_mode must be \"strict\" or \"lenient\", got \"" +
                      c.parsing_mode + "\"");
  }
  return c;
}

std::vector<Template> resolve_templates(const std::string& templates_spec) {
  if (templates_spec.empty() || templates_spec == "builtin") return builtin_templates();
  return load_templates(templates_spec);
}

}  // namespace syllogic
