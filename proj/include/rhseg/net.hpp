#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "rhseg/wire.hpp"

namespace rhseg::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  // "host:port"; IPv6 literals may be bracketed. Throws InvalidArgument.
  static Endpoint parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// Blocking TCP stream carrying framed messages.
class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  ~Connection();
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Throws WorkerUnreachable when no address accepts the connection.
  static Connection connect(const Endpoint& endpoint, std::chrono::milliseconds timeout);

  bool is_open() const noexcept { return fd_ >= 0; }
  void close() noexcept;
  // Zero disables the timeout.
  void set_receive_timeout(std::chrono::milliseconds timeout);

  void send(const wire::Message& message);
  // Writes bytes as they are, without framing.
  void send_raw(std::span<const std::uint8_t> bytes);
  // Throws Io when the peer closes or the read times out, and the wire
  // errors for malformed frames.
  wire::Message receive();

 private:
  void send_all(const std::uint8_t* data, std::size_t size);
  void receive_exact(std::uint8_t* data, std::size_t size);

  int fd_ = -1;
};

class Listener {
 public:
  // Port 0 picks an ephemeral port.
  explicit Listener(const Endpoint& endpoint);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  // Throws Io once the listener is shut down.
  Connection accept();
  // Wakes a blocked accept(); safe to call from another thread.
  void shutdown() noexcept;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Upper bound on accepted payloads, guarding allocations against hostile
// length fields.
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

}  // namespace rhseg::net
