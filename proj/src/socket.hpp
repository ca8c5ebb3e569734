#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace tid::net {

// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket() { reset(); }

  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void reset() noexcept;

  // Wakes any thread blocked in recv/send on this socket without releasing
  // the descriptor number.
  void shutdown() const noexcept;

 private:
  int fd_ = -1;
};

void set_nodelay(const Socket& s);
bool nodelay_enabled(const Socket& s);

struct Listener {
  Socket socket;
  std::uint16_t port = 0;
};

/// Throws Error{PortInUse} or Error{BindFailure}.
Listener listen_tcp(const std::string& bind_address, std::uint16_t port, int backlog = 64);

/// Waits up to `timeout` for a connection; returns an invalid Socket on timeout.
Socket accept_tcp(const Socket& listener, std::chrono::milliseconds timeout);

/// Throws Error{ConnectionRefused} or Error{Timeout}.
Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

/// Returns false once the peer is gone.
bool send_all(const Socket& s, std::string_view bytes);

/// Bytes read, 0 on orderly close, -1 on error.
long recv_some(const Socket& s, std::span<char> buffer);

}  // namespace tid::net
