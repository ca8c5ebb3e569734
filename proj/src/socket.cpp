#include "socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "tid/error.hpp"

namespace tid::net {

void Socket::reset() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() const noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void set_nodelay(const Socket& s) {
  int flag = 1;
  if (::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag)) != 0) {
    throw Error(Errc::IoFailure, std::string("TCP_NODELAY: ") + std::strerror(errno));
  }
}

bool nodelay_enabled(const Socket& s) {
  int flag = 0;
  socklen_t len = sizeof(flag);
  if (::getsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &flag, &len) != 0) return false;
  return flag != 0;
}

Listener listen_tcp(const std::string& bind_address, std::uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(Errc::BindFailure, std::strerror(errno));

  int reuse = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof(reuse));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::BindFailure, "bad bind address " + bind_address);
  }
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    if (err == EADDRINUSE) throw Error(Errc::PortInUse, std::to_string(port));
    throw Error(Errc::BindFailure, std::strerror(err));
  }
  if (::listen(s.fd(), backlog) != 0) throw Error(Errc::BindFailure, std::strerror(errno));

  socklen_t len = sizeof(addr);
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  return Listener{std::move(s), ntohs(addr.sin_port)};
}

Socket accept_tcp(const Socket& listener, std::chrono::milliseconds timeout) {
  pollfd pfd{listener.fd(), POLLIN, 0};
  const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (ready <= 0 || !(pfd.revents & POLLIN)) return Socket{};
  return Socket(::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC));
}

Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const auto service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &found) != 0 || found == nullptr) {
    throw Error(Errc::ConnectionRefused, "cannot resolve " + host);
  }
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);

  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0));
  if (!s.valid()) throw Error(Errc::IoFailure, std::strerror(errno));

  const std::string where = host + ":" + service;
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno != EINPROGRESS) throw Error(Errc::ConnectionRefused, where);
    pollfd pfd{s.fd(), POLLOUT, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (ready == 0) throw Error(Errc::Timeout, where);
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (ready < 0 || err != 0) throw Error(Errc::ConnectionRefused, where);
  }

  const int flags = ::fcntl(s.fd(), F_GETFL);
  ::fcntl(s.fd(), F_SETFL, flags & ~O_NONBLOCK);
  return s;
}

bool send_all(const Socket& s, std::string_view bytes) {
  while (!bytes.empty()) {
    const auto n = ::send(s.fd(), bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

long recv_some(const Socket& s, std::span<char> buffer) {
  for (;;) {
    const auto n = ::recv(s.fd(), buffer.data(), buffer.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    return static_cast<long>(n);
  }
}

}  // namespace tid::net
