#include "topobench/mock.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstring>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include "topobench/endpoint.hpp"
#include "topobench/error.hpp"

namespace topobench {

namespace {

bool icontains(std::string_view hay, std::string_view needle) {
  auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
  });
  return it != hay.end();
}

class HttpMock : public MockService {
 public:
  HttpMock(MockSpec spec, const Endpoint& ep) : MockService(std::move(spec)), ep_(ep) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(1); };
    server_.Post(ep_.path, [this](const httplib::Request& req, httplib::Response& res) {
      if (http_login_triggers(req.get_param_value("username"), req.get_param_value("password"))) {
        ++counter_;
        res.set_content(std::string(kImpactMarker) + " authentication bypassed, session issued for admin",
                        "text/plain");
        return;
      }
      res.status = 401;
      res.set_content("invalid credentials", "text/plain");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server_.Post("/__reset", [this](const httplib::Request&, httplib::Response& res) {
      counter_ = 0;
      res.set_content("ok", "text/plain");
    });
    server_.Get("/__state", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"mutation_counter\":" + std::to_string(counter_.load()) + "}", "application/json");
    });

    if (ep_.port == 0) {
      const int port = server_.bind_to_any_port(ep_.host);
      if (port < 0) throw Error("mock " + spec_.id + ": cannot bind " + ep_.host);
      ep_.port = static_cast<std::uint16_t>(port);
    } else if (!server_.bind_to_port(ep_.host, ep_.port)) {
      throw Error("mock " + spec_.id + ": cannot bind " + ep_.origin());
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    running_ = true;
  }

  ~HttpMock() override { stop(); }

  std::string endpoint() const override { return ep_.origin() + ep_.path; }
  std::uint64_t mutation_counter() const override { return counter_; }
  void reset() override {
    if (!running_) throw Error("mock " + spec_.id + " is stopped");
    counter_ = 0;
  }
  void stop() override {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
    running_ = false;
  }
  bool running() const override { return running_; }
  std::string reset_hook() const override { return ep_.origin() + "/__reset"; }
  std::string health_hook() const override { return ep_.origin() + "/health"; }

 private:
  Endpoint ep_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<bool> running_{false};
};

class TcpMock : public MockService {
 public:
  TcpMock(MockSpec spec, const Endpoint& ep) : MockService(std::move(spec)), ep_(ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error("mock " + spec_.id + ": socket failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep_.port);
    if (::inet_pton(AF_INET, ep_.host == "localhost" ? "127.0.0.1" : ep_.host.c_str(), &addr.sin_addr) != 1 ||
        ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
      ::close(fd_);
      throw Error("mock " + spec_.id + ": cannot bind tcp://" + ep_.host + ":" + std::to_string(ep_.port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    ep_.port = ntohs(addr.sin_port);
    running_ = true;
    thread_ = std::thread([this] { serve(); });
  }

  ~TcpMock() override { stop(); }

  std::string endpoint() const override { return "tcp://" + ep_.host + ":" + std::to_string(ep_.port); }
  std::uint64_t mutation_counter() const override { return counter_; }
  void reset() override {
    if (!running_) throw Error("mock " + spec_.id + " is stopped");
    counter_ = 0;
  }
  void stop() override {
    running_ = false;
    if (thread_.joinable()) thread_.join();
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }
  bool running() const override { return running_; }
  std::string reset_hook() const override { return endpoint(); }
  std::string health_hook() const override { return endpoint(); }

 private:
  std::string respond(const std::string& line) {
    if (line == "PING") return "PONG";
    if (line == "RESET") {
      counter_ = 0;
      return "OK";
    }
    if (line == "STATE") return "COUNTER " + std::to_string(counter_.load());
    if (tcp_record_triggers(line)) {
      ++counter_;
      return std::string(kImpactMarker) + " record overflowed the " + std::to_string(kTcpFieldSize) +
             "-byte field, return address clobbered";
    }
    return "ACK " + std::to_string(line.size());
  }

  void handle(int client) {
    std::string buf;
    char chunk[4096];
    while (running_) {
      pollfd p{client, POLLIN, 0};
      if (::poll(&p, 1, 2000) <= 0) break;
      const ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string out = respond(line) + "\n";
        if (::send(client, out.data(), out.size(), MSG_NOSIGNAL) < 0) return;
      }
    }
  }

  void serve() {
    while (running_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) continue;
      handle(client);
      ::close(client);
    }
  }

  Endpoint ep_;
  int fd_ = -1;
  std::thread thread_;
  std::atomic<std::uint64_t> counter_{0};
  std::atomic<bool> running_{false};
};

}  // namespace

bool http_login_triggers(std::string_view username, std::string_view password) {
  return icontains(username, "' OR 1=1") || icontains(password, "' OR 1=1");
}

bool tcp_record_triggers(std::string_view line) { return line.size() > kTcpFieldSize; }

std::unique_ptr<MockService> serve_mock(const MockSpec& spec, const std::string& endpoint) {
  // Port 0 (any free port) is valid here but not in target manifests.
  std::string text = endpoint;
  bool any_port = false;
  if (const auto sep = text.find("://"); sep != std::string::npos) {
    const auto end = std::min(text.find('/', sep + 3), text.size());
    const auto colon = text.rfind(':', end);
    if (colon != std::string::npos && colon > sep && text.substr(colon + 1, end - colon - 1) == "0") {
      text.replace(colon + 1, 1, "1");
      any_port = true;
    }
  }
  auto ep = parse_endpoint(text);
  if (!ep) throw Error("mock " + spec.id + ": unsupported endpoint " + endpoint);
  if (any_port) ep->port = 0;
  if (spec.domain == Domain::web) {
    if (ep->scheme != "http") throw Error("mock " + spec.id + ": web mocks need an http endpoint");
    return std::make_unique<HttpMock>(spec, *ep);
  }
  if (ep->scheme != "tcp") throw Error("mock " + spec.id + ": binary mocks need a tcp endpoint");
  return std::make_unique<TcpMock>(spec, *ep);
}

std::string http_exploit_poc() { return "username=admin%27+OR+1%3D1+--&password=x"; }
std::string tcp_exploit_poc() { return std::string(100, 'A'); }

void MockFleet::stop_all() {
  for (auto& s : services) s->stop();
}

MockFleet start_mock_fleet() {
  MockFleet fleet;
  fleet.suite.schema_version = kSupportedSchemaVersion;
  auto add = [&](MockSpec spec, const std::string& where, std::string language, std::string poc) {
    auto svc = serve_mock(spec, where);
    TargetSpec t;
    t.id = spec.id;
    t.domain = spec.domain;
    t.primary_cwe = spec.primary_cwe;
    t.blackbox_endpoint = svc->endpoint();
    t.whitebox_source_root = "mock/" + spec.id;
    t.language = std::move(language);
    t.description = spec.domain == Domain::web ? "login form query built by string concatenation"
                                               : "fixed-size record copied without a length check";
    t.loc = 40;
    t.reset_hook = svc->reset_hook();
    t.health_hook = svc->health_hook();
    fleet.suite.core_targets.push_back(t);
    fleet.simulated.push_back({svc->endpoint(), spec.primary_cwe, std::move(poc)});
    fleet.services.push_back(std::move(svc));
  };
  add({"M1", Domain::web, "CWE-89"}, "http://127.0.0.1:0/api/login", "C++", http_exploit_poc());
  add({"M2", Domain::binary, "CWE-120"}, "tcp://127.0.0.1:0", "C++", tcp_exploit_poc());
  return fleet;
}

}  // namespace topobench
