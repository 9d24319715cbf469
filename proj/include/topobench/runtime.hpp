#pragma once

// Uniform agent substrate: per-run budget, the backend contract, and
// invoke_agent, which drives one agent turn loop (including sandboxed tool
// calls) under the run deadline.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/error.hpp"
#include "topobench/prompts.hpp"
#include "topobench/registry.hpp"
#include "topobench/tool.hpp"
#include "topobench/types.hpp"

namespace topobench {

using Clock = std::chrono::steady_clock;

/// Per-run time and cost budget. Thread-safe; shared by all branches of one run.
class RunBudget {
 public:
  using CostFn = std::function<double(const TokenUsage&)>;

  explicit RunBudget(double outer_timeout_s, double tool_cap_s = kMaxToolCapSeconds,
                     std::optional<double> max_cost = std::nullopt, CostFn cost_fn = {});

  Clock::time_point start() const { return start_; }
  Clock::time_point deadline() const { return deadline_; }
  double tool_cap_seconds() const { return tool_cap_s_; }
  double remaining_seconds() const;
  /// Seconds since the run started.
  double elapsed() const;

  bool expired() const;
  bool cost_exhausted() const;

  void charge(const TokenUsage& usage);
  TokenUsage spent() const;

  std::stop_token stop_token() const { return stop_.get_token(); }
  void request_stop() { stop_.request_stop(); }
  bool stop_requested() const { return stop_.stop_requested(); }

 private:
  Clock::time_point start_;
  Clock::time_point deadline_;
  double tool_cap_s_;
  std::optional<double> max_cost_;
  CostFn cost_fn_;
  mutable std::mutex mu_;
  TokenUsage spent_;
  std::stop_source stop_;
};

struct Message {
  std::string role;  // system | user | assistant
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

struct AgentRequest {
  Role role = Role::scanner;
  std::string slot;  // e.g. "sas/scanner", "indep/worker-2/validator"
  std::vector<Message> messages;
  std::optional<TargetContext> target;
  std::optional<Claim> claim;  // set for validation tasks
  std::uint64_t seed = 0;
  int turn = 0;
  Clock::time_point deadline;
  std::stop_token stop;
};

struct AgentReply {
  std::string content;
  TokenUsage usage;
};

/// Raised by backends for network/provider failures.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Model-family backend. Implementations must tolerate concurrent calls.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string identity() const = 0;
  virtual bool supports(Role) const { return true; }
  virtual AgentReply complete(const AgentRequest& request) = 0;
};

enum class OutcomeStatus { ok, transport_error, timeout };
std::string_view to_string(OutcomeStatus s);

struct ToolCallRecord {
  std::string command;
  ToolResult result;
};

struct AgentOutcome {
  std::vector<Claim> claims;
  std::optional<AttemptVerdict> verdict;  // validation tasks only
  std::string evidence;
  std::vector<Message> transcript;
  std::vector<ToolCallRecord> tool_calls;
  TokenUsage usage;
  double wall_time = 0.0;
  OutcomeStatus status = OutcomeStatus::ok;
  std::string error;
};

struct InvokeOptions {
  std::string slot;
  std::optional<Claim> claim;
  std::uint64_t seed = 0;
  int max_tool_turns = 8;
  /// Scratch directory for tool calls; empty uses a throwaway temp directory.
  std::filesystem::path scratch_dir;
};

/// Picks the system text for a role: scanner/planner use the main prompt.
const std::string& system_prompt_for(const PromptBundle& bundle, Role role);

/// Fixed harness instructions appended after the prompt bundle.
std::string scan_instruction();
std::string validation_instruction(const Claim& claim, const std::string& endpoint);

/// Runs one agent task. Never throws for transport problems or deadline
/// overrun (those become status values); throws BudgetExhausted when the
/// budget is already spent before the call and ConfigError when the backend
/// does not support the role.
AgentOutcome invoke_agent(const std::shared_ptr<AgentBackend>& backend, const PromptBundle& bundle, Role role,
                          RunBudget& budget, const InvokeOptions& options,
                          const std::optional<TargetContext>& target);

/// Parsed form of an agent reply.
struct ParsedReply {
  std::optional<std::string> tool_command;
  std::optional<std::vector<Claim>> findings;
  std::optional<AttemptVerdict> verdict;
  std::string evidence;
};

ParsedReply parse_agent_reply(const std::string& content);

void to_json(nlohmann::json& j, const Message& m);
void from_json(const nlohmann::json& j, Message& m);

}  // namespace topobench
