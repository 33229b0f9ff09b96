#include "apitag/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "apitag/errors.hpp"
#include "apitag/util.hpp"

namespace apitag {

TcpSocket::~TcpSocket() { close(); }

TcpSocket::TcpSocket(TcpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpSocket& TcpSocket::operator=(TcpSocket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void TcpSocket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<TcpSocket> TcpSocket::connect(const std::string& host, int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return std::nullopt;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return std::nullopt;
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return std::nullopt;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpSocket(fd);
}

bool TcpSocket::write_all(std::string_view data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

long TcpSocket::read_some(std::string& buffer, std::size_t max_chunk) {
  char chunk[16384];
  std::size_t want = std::min(max_chunk, sizeof(chunk));
  ssize_t n = ::recv(fd_, chunk, want, 0);
  if (n > 0) buffer.append(chunk, static_cast<std::size_t>(n));
  return static_cast<long>(n);
}

TcpListener::~TcpListener() { shutdown(); }

bool TcpListener::listen(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) return false;
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    return false;
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 128) != 0) {
    ::close(fd_);
    fd_ = -1;
    return false;
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len) == 0)
    port_ = ntohs(bound.sin_port);
  return true;
}

TcpSocket TcpListener::accept(std::string* peer_address) {
  sockaddr_in peer{};
  socklen_t len = sizeof(peer);
  int fd = ::accept(fd_, reinterpret_cast<sockaddr*>(&peer), &len);
  if (fd < 0) return TcpSocket();
  if (peer_address) {
    char buf[INET_ADDRSTRLEN] = {0};
    ::inet_ntop(AF_INET, &peer.sin_addr, buf, sizeof(buf));
    *peer_address = buf;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpSocket(fd);
}

void TcpListener::shutdown() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

namespace {

// Case-insensitive header scan inside a raw head block.
std::optional<std::string> head_header(std::string_view head, std::string_view name) {
  std::size_t pos = 0;
  bool first = true;
  while (pos < head.size()) {
    std::size_t eol = head.find("\r\n", pos);
    if (eol == std::string_view::npos) eol = head.size();
    std::string_view line = head.substr(pos, eol - pos);
    pos = eol + 2;
    if (first) {
      first = false;
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    if (iequals(trim(line.substr(0, colon)), name))
      return std::string(trim(line.substr(colon + 1)));
  }
  return std::nullopt;
}

// Scans a chunked body in `data`; returns total framed length when the
// terminal chunk (plus trailer) is complete, nullopt while more bytes are
// needed.
std::optional<std::size_t> chunked_length(std::string_view data) {
  std::size_t pos = 0;
  while (true) {
    std::size_t eol = data.find("\r\n", pos);
    if (eol == std::string_view::npos) return std::nullopt;
    std::string_view size_line = data.substr(pos, eol - pos);
    if (std::size_t ext = size_line.find(';'); ext != std::string_view::npos)
      size_line = size_line.substr(0, ext);
    std::size_t chunk = 0;
    try {
      chunk = std::stoull(std::string(trim(size_line)), nullptr, 16);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    pos = eol + 2;
    if (chunk == 0) {
      // Trailer section ends with CRLF (empty trailer) or CRLFCRLF.
      std::size_t end = data.find("\r\n", pos);
      if (end == std::string_view::npos) return std::nullopt;
      if (end == pos) return pos + 2;
      std::size_t final_end = data.find("\r\n\r\n", pos);
      if (final_end == std::string_view::npos) return std::nullopt;
      return final_end + 4;
    }
    if (pos + chunk + 2 > data.size()) return std::nullopt;
    pos += chunk;
    if (data.substr(pos, 2) != "\r\n") return std::nullopt;
    pos += 2;
  }
}

}  // namespace

std::optional<HttpMessage> read_http_message(TcpSocket& sock, std::string& buffer,
                                             bool is_response, std::size_t max_body,
                                             std::string_view request_method) {
  // Accumulate until the head is complete.
  std::size_t head_end;
  while ((head_end = buffer.find("\r\n\r\n")) == std::string::npos) {
    if (buffer.size() > 256 * 1024) return std::nullopt;  // header flood
    long n = sock.read_some(buffer);
    if (n <= 0) return std::nullopt;
  }
  head_end += 4;

  HttpMessage msg;
  msg.head = buffer.substr(0, head_end);

  std::optional<std::string> connection = head_header(msg.head, "connection");
  if (connection) {
    std::string value = to_lower(*connection);
    msg.keep_alive = value.find("close") == std::string::npos;
  } else {
    msg.keep_alive = msg.head.find("HTTP/1.0") == std::string::npos;
  }

  bool bodyless_response =
      is_response && (iequals(request_method, "HEAD") || msg.head.find(" 204") == 8 ||
                      msg.head.find(" 304") == 8);

  std::optional<std::string> te = head_header(msg.head, "transfer-encoding");
  std::optional<std::string> cl = head_header(msg.head, "content-length");

  if (bodyless_response) {
    buffer.erase(0, head_end);
    return msg;
  }

  if (te && to_lower(*te).find("chunked") != std::string::npos) {
    msg.chunked = true;
    std::optional<std::size_t> framed;
    while (!(framed = chunked_length(std::string_view(buffer).substr(head_end)))) {
      if (!is_response && buffer.size() - head_end > max_body)
        throw OversizeBody(buffer.size() - head_end, max_body);
      long n = sock.read_some(buffer);
      if (n <= 0) return std::nullopt;
    }
    if (!is_response && *framed > max_body) throw OversizeBody(*framed, max_body);
    msg.body = buffer.substr(head_end, *framed);
    buffer.erase(0, head_end + *framed);
    return msg;
  }

  if (cl) {
    std::optional<double> len = parse_number(*cl);
    if (!len || *len < 0) return std::nullopt;
    std::size_t want = static_cast<std::size_t>(*len);
    if (!is_response && want > max_body) throw OversizeBody(want, max_body);
    while (buffer.size() - head_end < want) {
      long n = sock.read_some(buffer);
      if (n <= 0) return std::nullopt;
    }
    msg.body = buffer.substr(head_end, want);
    buffer.erase(0, head_end + want);
    return msg;
  }

  if (is_response) {
    // No framing information: body extends to connection close.
    while (true) {
      long n = sock.read_some(buffer);
      if (n <= 0) break;
    }
    msg.body = buffer.substr(head_end);
    msg.keep_alive = false;
    buffer.clear();
    return msg;
  }

  // Requests without Content-Length or Transfer-Encoding have no body.
  buffer.erase(0, head_end);
  return msg;
}

}  // namespace apitag
