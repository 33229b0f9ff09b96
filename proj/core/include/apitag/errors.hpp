#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apitag {

// Request line or header section could not be parsed. The proxy answers 400.
class MalformedRequest : public std::runtime_error {
 public:
  explicit MalformedRequest(const std::string& what) : std::runtime_error(what) {}
};

// Body exceeds the configured maximum. The proxy answers 413.
class OversizeBody : public std::runtime_error {
 public:
  OversizeBody(std::size_t size, std::size_t limit)
      : std::runtime_error("request body of " + std::to_string(size) +
                           " bytes exceeds limit of " + std::to_string(limit)),
        size(size),
        limit(limit) {}
  std::size_t size;
  std::size_t limit;
};

class DuplicateTag : public std::runtime_error {
 public:
  explicit DuplicateTag(const std::string& name)
      : std::runtime_error("tag already exists: " + name) {}
};

class UnknownContainer : public std::runtime_error {
 public:
  explicit UnknownContainer(const std::string& id)
      : std::runtime_error("no context recorded for container: " + id) {}
};

class MalformedPreloadFile : public std::runtime_error {
 public:
  MalformedPreloadFile(const std::string& path, std::size_t line, const std::string& why)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + why), line(line) {}
  std::size_t line;
};

class CorpusNotFound : public std::runtime_error {
 public:
  explicit CorpusNotFound(const std::string& path)
      : std::runtime_error("corpus file not found: " + path) {}
};

class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(const std::string& path, std::size_t line, const std::string& why)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + why), line(line) {}
  std::size_t line;
};

// Raised when the configured inference backend cannot produce an answer.
// The pipeline translates this into the configured fail-open/fail-closed behavior.
class InferenceUnavailable : public std::runtime_error {
 public:
  explicit InferenceUnavailable(const std::string& why)
      : std::runtime_error("inference unavailable: " + why) {}
};

class ProxyUnreachable : public std::runtime_error {
 public:
  explicit ProxyUnreachable(const std::string& addr)
      : std::runtime_error("proxy unreachable at " + addr) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& why) : std::runtime_error(why) {}
};

}  // namespace apitag
