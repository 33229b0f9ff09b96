#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace apitag {

using TimestampMs = std::int64_t;

// Wall clock, milliseconds since the Unix epoch.
TimestampMs now_ms();

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Lowercases and splits camelCase boundaries into underscores, so that
// "maxResults", "max_results" and "MAX-RESULTS" all normalize to "max_results".
std::string normalize_param_name(std::string_view name);

// Strict numeric parse of a whole token; rejects trailing garbage.
std::optional<double> parse_number(std::string_view s);

// Percent-decodes a URL component. '+' becomes space when plus_as_space is set.
// Malformed or truncated escapes are kept verbatim.
std::string url_decode(std::string_view s, bool plus_as_space);

// Percent-encodes characters outside the URL "unreserved" set.
std::string url_encode(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace apitag
