#include "topobench/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace topobench::net {

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

 private:
  int fd_;
};

int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

std::optional<int> connect_with_timeout(const std::string& host, std::uint16_t port,
                                        std::chrono::steady_clock::time_point deadline) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr) {
    return std::nullopt;
  }
  std::optional<int> result;
  for (auto* ai = res; ai != nullptr && !result; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) == 1) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
      } else {
        rc = -1;
      }
    }
    if (rc == 0) {
      result = fd;
    } else {
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  return result;
}

}  // namespace

std::optional<std::string> tcp_exchange_line(const std::string& host, std::uint16_t port, std::string_view line,
                                             std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  const auto fd = connect_with_timeout(host, port, deadline);
  if (!fd) return std::nullopt;
  Socket sock(*fd);

  std::string out(line);
  out.push_back('\n');
  std::size_t sent = 0;
  while (sent < out.size()) {
    pollfd p{sock.get(), POLLOUT, 0};
    if (::poll(&p, 1, remaining_ms(deadline)) != 1) return std::nullopt;
    const auto n = ::send(sock.get(), out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      return std::nullopt;
    }
    sent += static_cast<std::size_t>(n);
  }

  std::string reply;
  char buf[1024];
  while (true) {
    const auto nl = reply.find('\n');
    if (nl != std::string::npos) return reply.substr(0, nl);
    pollfd p{sock.get(), POLLIN, 0};
    if (::poll(&p, 1, remaining_ms(deadline)) != 1) return std::nullopt;
    const auto n = ::recv(sock.get(), buf, sizeof(buf), 0);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      return std::nullopt;
    }
    if (n == 0) return reply.empty() ? std::nullopt : std::optional<std::string>(reply);
    reply.append(buf, static_cast<std::size_t>(n));
  }
}

bool tcp_can_connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  const auto fd = connect_with_timeout(host, port, std::chrono::steady_clock::now() + timeout);
  if (!fd) return false;
  ::close(*fd);
  return true;
}

}  // namespace topobench::net
