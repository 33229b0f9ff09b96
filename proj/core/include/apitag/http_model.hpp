#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apitag/util.hpp"

namespace apitag {

inline constexpr std::size_t kDefaultMaxBodyBytes = 1 << 20;  // 1 MiB

// An HTTP/1.1 request decomposed into its components. Header names are stored
// lowercase; lookups are case-insensitive. The path never carries the query
// string. body_params is populated from form-encoded or JSON bodies (JSON is
// flattened one nesting level, keys joined with "."); the raw body is always
// retained alongside.
struct ParsedRequest {
  std::string method;
  std::string path;
  std::string version = "HTTP/1.1";
  std::vector<std::pair<std::string, std::string>> query_params;  // insertion order
  std::vector<std::pair<std::string, std::string>> headers;       // lowercase names
  std::vector<std::pair<std::string, std::string>> body_params;
  std::string body_raw;
  std::string peer_address;

  const std::string* header(std::string_view name) const;
  const std::string* query_param(std::string_view name) const;
  const std::string* body_param(std::string_view name) const;

  // Query and body parameters in scan order: query first, then body, with a
  // body value shadowing a query parameter of the same name.
  std::vector<std::pair<std::string, std::string>> merged_params() const;

  // First request line without the version, e.g. "GET /query?numResults=10".
  std::string request_line_short() const;
};

// Identifies an endpoint: method plus normalized path, insensitive to query
// string and body. Path normalization strips one trailing slash and lowercases
// percent-escape hex digits.
struct CacheKey {
  std::string method;
  std::string path;

  bool operator==(const CacheKey& other) const = default;
  std::string to_string() const { return method + " " + path; }
};

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const {
    return std::hash<std::string>()(k.method) * 31 ^ std::hash<std::string>()(k.path);
  }
};

struct SourceAttributes {
  std::string client_ip;
  std::optional<std::vector<std::string>> forwarded_for;
  std::optional<std::string> real_ip;
};

// Parses a complete HTTP/1.1 request (head plus optional body).
// Throws MalformedRequest on unparseable request line or headers and
// OversizeBody when the body exceeds max_body bytes.
ParsedRequest parse_request(std::string_view raw, std::string_view peer,
                            std::size_t max_body = kDefaultMaxBodyBytes);

// Renders a ParsedRequest back to wire format. Content-Length is emitted from
// the actual body size; other headers are written as stored.
std::string serialize_request(const ParsedRequest& r);

CacheKey request_key(const ParsedRequest& r);

std::string normalize_key_path(std::string_view path);

SourceAttributes extract_source_attributes(const ParsedRequest& r);

}  // namespace apitag
