#pragma once

// Concrete AgentBackend implementations: scripted playback, a seeded
// stochastic simulator, a deterministic PoC-replay validator and the remote
// chat-completions transport.

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/runtime.hpp"

namespace topobench {

/// What a scripted agent does in one slot.
struct ScriptedBehavior {
  std::vector<Claim> claims;
  /// Validation verdicts keyed by canonical CWE; unlisted CWEs get `default_verdict`.
  std::map<std::string, AttemptVerdict> verdicts;
  AttemptVerdict default_verdict = AttemptVerdict::rejected;
  std::string evidence = "scripted validation evidence";
  TokenUsage usage{1000, 200};
  /// Commands issued as tool calls before the final answer.
  std::vector<std::string> tool_commands;
  /// Blocks (cooperatively) for this long before answering.
  double stall_seconds = 0.0;
  bool transport_error = false;
};

/// Plays back fixed behaviours. Lookup order: exact slot, then role name, then default.
class ScriptedBackend : public AgentBackend {
 public:
  explicit ScriptedBackend(std::string identity = "scripted", ScriptedBehavior fallback = {});

  ScriptedBackend& on_slot(const std::string& slot, ScriptedBehavior behavior);
  ScriptedBackend& on_role(Role role, ScriptedBehavior behavior);

  std::string identity() const override { return identity_; }
  AgentReply complete(const AgentRequest& request) override;

  /// Renders the reply text a behaviour produces; exposed for tests.
  static std::string render_reply(const ScriptedBehavior& behavior, const AgentRequest& request);

 private:
  const ScriptedBehavior& lookup(const AgentRequest& request) const;

  std::string identity_;
  ScriptedBehavior fallback_;
  std::map<std::string, ScriptedBehavior> by_slot_;
  std::map<Role, ScriptedBehavior> by_role_;
};

/// Simulation-only knowledge of a target: where it lives and what breaks it.
struct SimulatedTarget {
  std::string endpoint;
  std::string truth_cwe;
  std::string exploit_poc;
};

struct StochasticConfig {
  std::string identity = "sim";
  /// Probability that one scanning agent ranks the true CWE (with a working PoC) first.
  double p_white = 0.9;
  double p_black = 0.3;
  /// Probability that a simulated validator confirms a working PoC for the true CWE.
  double p_validate = 1.0;
  std::vector<std::string> decoy_cwes = {"CWE-79", "CWE-200", "CWE-22", "CWE-400"};
  std::vector<SimulatedTarget> targets;
  TokenUsage base_usage{1500, 500};
  std::uint64_t seed = 0;
};

/// Seeded simulator. Every draw is a pure function of (seed, request seed,
/// slot, role, mode, endpoint), so repeated runs are bit-identical and
/// concurrent calls need no shared state.
class StochasticBackend : public AgentBackend {
 public:
  explicit StochasticBackend(StochasticConfig config);

  std::string identity() const override { return config_.identity; }
  AgentReply complete(const AgentRequest& request) override;

  const StochasticConfig& config() const { return config_; }

 private:
  const SimulatedTarget* find_target(const std::string& endpoint) const;

  StochasticConfig config_;
};

/// Non-LLM validator: replays a claim's PoC against the live endpoint and
/// confirms only when the response carries the impact marker. HTTP PoCs are
/// sent as a form-encoded POST body; TCP PoCs as one line.
class ReplayValidatorBackend : public AgentBackend {
 public:
  explicit ReplayValidatorBackend(std::string impact_marker = "IMPACT:", double request_timeout_s = 5.0);

  std::string identity() const override { return "replay-validator"; }
  bool supports(Role role) const override { return role == Role::validator || role == Role::sandbox; }
  AgentReply complete(const AgentRequest& request) override;

 private:
  std::string marker_;
  double timeout_s_;
};

struct RemoteConfig {
  std::string identity;
  std::string base_url;  // e.g. https://api.example.com
  std::string path = "/v1/chat/completions";
  std::string model;
  /// Environment variable holding the bearer token; empty sends no credentials.
  std::string api_key_env;
  int max_retries = 2;
  double initial_backoff_s = 1.0;
  double request_timeout_s = 300.0;
  /// Extra top-level request fields passed through verbatim (e.g. reasoning options).
  nlohmann::json pass_through = nlohmann::json::object();
};

/// Chat-completions transport. Request {model, messages[{role, content}]};
/// response content from choices[0].message.content, message.content or
/// content; usage from usage.{input,output}_tokens or {prompt,completion}_tokens.
class RemoteBackend : public AgentBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  std::string identity() const override { return config_.identity; }
  AgentReply complete(const AgentRequest& request) override;

  static nlohmann::json build_request(const RemoteConfig& config, const std::vector<Message>& messages);
  static AgentReply parse_response(const nlohmann::json& body);

 private:
  RemoteConfig config_;
  std::string api_key_;
};

/// Decorator that records every request it forwards.
class RecordingBackend : public AgentBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<AgentBackend> inner) : inner_(std::move(inner)) {}

  std::string identity() const override { return inner_->identity(); }
  bool supports(Role role) const override { return inner_->supports(role); }
  AgentReply complete(const AgentRequest& request) override;

  std::vector<AgentRequest> requests() const;

 private:
  std::shared_ptr<AgentBackend> inner_;
  mutable std::mutex mu_;
  std::vector<AgentRequest> requests_;
};

}  // namespace topobench
