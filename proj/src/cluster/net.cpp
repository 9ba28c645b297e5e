#include "rhseg/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <memory>

#include "rhseg/error.hpp"

namespace rhseg::net {
namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const noexcept { freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) {
    throw Error(passive ? ErrorKind::Io : ErrorKind::WorkerUnreachable,
                "cannot resolve " + ep.to_string() + ": " + gai_strerror(rc));
  }
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

bool connect_with_timeout(int fd, const sockaddr* addr, socklen_t len, std::chrono::milliseconds timeout) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, addr, len);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd p{fd, POLLOUT, 0};
    rc = poll(&p, 1, timeout.count() > 0 ? static_cast<int>(timeout.count()) : -1);
    if (rc <= 0) return false;
    int err = 0;
    socklen_t elen = sizeof(err);
    getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
    rc = err == 0 ? 0 : -1;
  }
  fcntl(fd, F_SETFL, flags);
  return rc == 0;
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(ErrorKind::InvalidArgument, "endpoint '" + std::string(text) + "' is not host:port");
  }
  std::string_view host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string_view port_text = text.substr(colon + 1);
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || end != port_text.data() + port_text.size() || value > 65535) {
    throw Error(ErrorKind::InvalidArgument, "bad port in endpoint '" + std::string(text) + "'");
  }
  return Endpoint{std::string(host), static_cast<std::uint16_t>(value)};
}

std::string Endpoint::to_string() const {
  const bool v6 = host.find(':') != std::string::npos;
  return (v6 ? "[" + host + "]" : host) + ":" + std::to_string(port);
}

Connection::~Connection() { close(); }

Connection::Connection(Connection&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Connection::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Connection Connection::connect(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  const auto addrs = resolve(endpoint, false);
  std::string last = "no addresses";
  for (addrinfo* a = addrs.get(); a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) {
      last = errno_text();
      continue;
    }
    if (connect_with_timeout(fd, a->ai_addr, a->ai_addrlen, timeout)) {
      const int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Connection(fd);
    }
    last = errno_text();
    ::close(fd);
  }
  throw Error(ErrorKind::WorkerUnreachable, "cannot connect to " + endpoint.to_string() + ": " + last);
}

void Connection::set_receive_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void Connection::send_all(const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd_, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::Io, "send failed: " + errno_text());
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void Connection::receive_exact(std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::recv(fd_, data, size, 0);
    if (n == 0) throw Error(ErrorKind::Io, "peer closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::Io, "receive failed: " + errno_text());
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void Connection::send(const wire::Message& message) {
  if (!is_open()) throw Error(ErrorKind::Io, "connection is closed");
  const auto bytes = wire::encode_message(message);
  send_all(bytes.data(), bytes.size());
}

void Connection::send_raw(std::span<const std::uint8_t> bytes) {
  if (!is_open()) throw Error(ErrorKind::Io, "connection is closed");
  send_all(bytes.data(), bytes.size());
}

wire::Message Connection::receive() {
  if (!is_open()) throw Error(ErrorKind::Io, "connection is closed");
  std::uint8_t header[wire::kHeaderSize];
  receive_exact(header, sizeof(header));
  const wire::FrameHeader h = wire::decode_header(header);
  if (h.payload_len > kMaxPayload) {
    throw Error(ErrorKind::ProtocolError, "payload of " + std::to_string(h.payload_len) + " bytes is too large");
  }
  wire::Message m{h.type, std::vector<std::uint8_t>(h.payload_len)};
  receive_exact(m.payload.data(), m.payload.size());
  return m;
}

Listener::Listener(const Endpoint& endpoint) {
  const auto addrs = resolve(endpoint, true);
  std::string last = "no addresses";
  for (addrinfo* a = addrs.get(); a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) {
      last = errno_text();
      continue;
    }
    const int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      sockaddr_storage addr{};
      socklen_t len = sizeof(addr);
      getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
      port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                               : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
      fd_ = fd;
      return;
    }
    last = errno_text();
    ::close(fd);
  }
  throw Error(ErrorKind::Io, "cannot listen on " + endpoint.to_string() + ": " + last);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Connection Listener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Connection(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    throw Error(ErrorKind::Io, "accept failed: " + errno_text());
  }
}

void Listener::shutdown() noexcept { ::shutdown(fd_, SHUT_RDWR); }

}  // namespace rhseg::net
