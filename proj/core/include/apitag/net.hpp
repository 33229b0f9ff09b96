#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace apitag {

// Thin RAII wrapper over a connected TCP socket.
class TcpSocket {
 public:
  TcpSocket() = default;
  explicit TcpSocket(int fd) : fd_(fd) {}
  ~TcpSocket();

  TcpSocket(TcpSocket&& other) noexcept;
  TcpSocket& operator=(TcpSocket&& other) noexcept;
  TcpSocket(const TcpSocket&) = delete;
  TcpSocket& operator=(const TcpSocket&) = delete;

  static std::optional<TcpSocket> connect(const std::string& host, int port);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void close();

  // Returns false on EOF or error.
  bool write_all(std::string_view data);
  // Appends up to max_chunk bytes; returns bytes read, 0 on EOF, -1 on error.
  long read_some(std::string& buffer, std::size_t max_chunk = 16384);

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener() = default;
  ~TcpListener();

  TcpListener(TcpListener&&) = delete;
  TcpListener& operator=(TcpListener&&) = delete;

  // Binds and listens; port 0 picks an ephemeral port readable via port().
  bool listen(const std::string& host, int port);
  // Blocks; returns an invalid socket when the listener was shut down.
  TcpSocket accept(std::string* peer_address = nullptr);
  void shutdown();

  int port() const { return port_; }
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  int port_ = 0;
};

// HTTP/1.1 framing over a socket buffer: the result of reading one message.
struct HttpMessage {
  std::string head;   // start line + headers + terminating CRLFCRLF
  std::string body;   // raw body bytes as received (chunked bodies keep framing)
  bool keep_alive = true;
  bool chunked = false;

  std::string raw() const { return head + body; }
};

// Reads one HTTP request or response from the socket. `buffer` carries
// leftover bytes between keep-alive messages. For responses pass the request
// method so HEAD/204/304 framing is handled. Returns nullopt on EOF/error
// before a complete message; throws OversizeBody when a request body exceeds
// max_body (responses are not capped).
std::optional<HttpMessage> read_http_message(TcpSocket& sock, std::string& buffer,
                                             bool is_response, std::size_t max_body,
                                             std::string_view request_method = "");

}  // namespace apitag
