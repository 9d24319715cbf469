#pragma once

// In-process vulnerable-by-construction services for end-to-end tests:
// a web-style HTTP login service and a binary-style line protocol over TCP.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "topobench/backends.hpp"
#include "topobench/registry.hpp"

namespace topobench {

/// Impact marker carried by every exploit-trigger response.
inline constexpr std::string_view kImpactMarker = "IMPACT:";
/// Fixed record size of the TCP mock; longer records overflow it.
inline constexpr std::size_t kTcpFieldSize = 64;

struct MockSpec {
  std::string id;
  Domain domain = Domain::web;
  std::string primary_cwe;
};

/// Trigger predicates. Pure per request.
bool http_login_triggers(std::string_view username, std::string_view password);
bool tcp_record_triggers(std::string_view line);

class MockService {
 public:
  virtual ~MockService() = default;
  /// Resolved endpoint (actual port when started on port 0).
  virtual std::string endpoint() const = 0;
  virtual std::uint64_t mutation_counter() const = 0;
  /// Restores fresh-start state. Throws Error when the service is stopped.
  virtual void reset() = 0;
  virtual void stop() = 0;
  virtual bool running() const = 0;
  /// Hook strings usable as TargetSpec reset/health hooks.
  virtual std::string reset_hook() const = 0;
  virtual std::string health_hook() const = 0;
  const MockSpec& spec() const { return spec_; }

 protected:
  explicit MockService(MockSpec spec) : spec_(std::move(spec)) {}
  MockSpec spec_;
};

/// Starts a mock on `endpoint` (http://host:port/path for web, tcp://host:port
/// for binary; port 0 picks a free port). Throws Error on bind failure or a
/// scheme that does not match the domain.
std::unique_ptr<MockService> serve_mock(const MockSpec& spec, const std::string& endpoint);

/// Two running mocks (M1 web/CWE-89, M2 binary/CWE-120), a manifest describing
/// them, and the simulation knowledge a stochastic backend needs.
struct MockFleet {
  std::vector<std::unique_ptr<MockService>> services;
  SuiteManifest suite;
  std::vector<SimulatedTarget> simulated;

  void stop_all();
};

MockFleet start_mock_fleet();

/// Working exploit inputs for the two mocks.
std::string http_exploit_poc();
std::string tcp_exploit_poc();

}  // namespace topobench
