#pragma once

#include <string>
#include <string_view>

namespace syllogic {

// SHA-256 of `data`, lowercase hex (64 chars).
std::string sha256_hex(std::string_view data);

// First 16 hex chars of sha256_hex; used for ids that appear in filenames.
std::string short_hash(std::string_view data);

}  // namespace syllogic
