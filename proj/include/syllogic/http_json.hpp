#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace syllogic {

// Splits "http://host:port/prefix" into client base and path prefix.
struct ParsedUrl {
  std::string base;    // scheme://host[:port]
  std::string prefix;  // leading path, "" or "/x/y" (no trailing slash)
};
ParsedUrl parse_url(const std::string& url);

// POSTs `body` as application/json to url+path and returns the parsed
// response body. Retries transport failures, 429 and 5xx with exponential
// backoff; at most `attempts` tries in total. Throws GatewayError carrying
// `request_key` on exhaustion, other non-2xx statuses, or an unparsable
// body.
nlohmann::json post_json(const std::string& url, const std::string& path,
                         const nlohmann::json& body,
                         const std::map<std::string, std::string>& headers,
                         int attempts, int backoff_base_ms,
                         const std::string& request_key);

}  // namespace syllogic
