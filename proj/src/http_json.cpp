#include "syllogic/http_json.hpp"

#include <chrono>
#include <memory>
#include <thread>

#include <httplib.h>

#include "syllogic/errors.hpp"

namespace syllogic {

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string base = url.substr(0, path_start);
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base, prefix};
}

nlohmann::json post_json(const std::string& url, const std::string& path,
                         const nlohmann::json& body,
                         const std::map<std::string, std::string>& headers,
                         int attempts, int backoff_base_ms,
                         const std::string& request_key) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.base);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers hdrs(headers.begin(), headers.end());
  const std::string payload = body.dump();
  const std::string full_path = parsed.prefix + path;

  if (attempts < 1) attempts = 1;
  std::string last_failure;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1 && backoff_base_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(backoff_base_ms << (attempt - 2)));
    }
    httplib::Result res = client.Post(full_path, hdrs, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw GatewayError("HTTP " + std::to_string(res->status) + " from " +
                             parsed.base + full_path,
                         request_key);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError(std::string("malformed response body: ") + e.what(),
                         request_key);
    }
  }
  throw GatewayError("retries exhausted after " + std::to_string(attempts) +
                         " attempts (" + last_failure + ") for " + parsed.base +
                         full_path,
                     request_key);
}

}  // namespace syllogic
