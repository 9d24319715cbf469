#pragma once

// The five coordination topologies. Each engine is deterministic control
// flow over invoke_agent and produces one RunReport.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/prompts.hpp"
#include "topobench/registry.hpp"
#include "topobench/runtime.hpp"
#include "topobench/types.hpp"

namespace topobench {

struct ValidationAttempt {
  Claim claim;
  AttemptVerdict verdict = AttemptVerdict::inconclusive;
  std::string evidence;
  double started = 0.0;  // seconds since run start (monotonic)
  double ended = 0.0;
  std::string source;    // slot that ran the attempt
  bool recheck = false;  // second-stage check of an already confirmed claim

  friend bool operator==(const ValidationAttempt&, const ValidationAttempt&) = default;
};

struct BranchResult {
  std::string source;
  int source_index = 0;
  std::optional<Claim> report_claim;
  bool validated = false;
  std::vector<ValidationAttempt> attempts;
  TokenUsage usage;
  bool infra_failed = false;

  /// Confidence of the report claim, 0 without one.
  double confidence() const { return report_claim ? report_claim->confidence : 0.0; }

  friend bool operator==(const BranchResult&, const BranchResult&) = default;
};

enum class RunStatus { completed, failed_placeholder, infra_error };
std::string_view to_string(RunStatus s);
RunStatus parse_run_status(std::string_view s);

struct EmittedClaim {
  std::string source;
  Claim claim;

  friend bool operator==(const EmittedClaim&, const EmittedClaim&) = default;
};

/// One agent invocation, persisted to messages.jsonl.
struct InvocationRecord {
  std::string slot;
  Role role = Role::scanner;
  OutcomeStatus status = OutcomeStatus::ok;
  std::string error;
  double started = 0.0;
  double ended = 0.0;
  TokenUsage usage;
  std::vector<Message> messages;
  std::vector<std::string> tool_commands;

  friend bool operator==(const InvocationRecord&, const InvocationRecord&) = default;
};

struct RunReport {
  std::string run_id;
  Architecture architecture = Architecture::sas;
  std::optional<Claim> selected;
  bool validated = false;
  std::vector<ValidationAttempt> attempts;
  std::vector<BranchResult> branch_results;
  std::vector<EmittedClaim> emitted;
  std::optional<double> ttfv;
  std::optional<std::size_t> ttfv_attempt;
  TokenUsage usage_total;
  RunStatus status = RunStatus::completed;
  std::string error;
  double wall_time = 0.0;
  std::vector<InvocationRecord> invocations;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Indices of confirmed attempts that no later re-check of the same CWE overruled.
std::vector<std::size_t> effective_confirmations(std::span<const ValidationAttempt> attempts);

/// Backends per coordination slot. Unset planner and specialist fall back to
/// the scanner. The specialist runs in the sandbox role: it executes the
/// Central planner's top claim and scans for the Hybrid sandbox branch.
struct EngineAgents {
  std::shared_ptr<AgentBackend> scanner;
  std::shared_ptr<AgentBackend> validator;
  std::shared_ptr<AgentBackend> planner;
  std::shared_ptr<AgentBackend> specialist;
};

enum class AlternatePolicy {
  first_differing_cwe,  // first sandbox claim whose CWE differs from the orchestrator's top
  sandbox_top,          // always the sandbox top claim
};

struct EngineOptions {
  bool hybrid_recheck = true;
  AlternatePolicy hybrid_alternate = AlternatePolicy::first_differing_cwe;
  int max_tool_turns = 8;
  bool parallel_branches = true;
  std::uint64_t seed = 0;
  std::filesystem::path scratch_dir;
};

struct EngineContext {
  std::string run_id;
  PromptBundle prompts;
  TargetContext target;
  EngineAgents agents;
  EngineOptions options;
};

RunReport run_sas(const EngineContext& ctx, RunBudget& budget);
RunReport run_mas_indep(const EngineContext& ctx, RunBudget& budget);
RunReport run_mas_decent(const EngineContext& ctx, RunBudget& budget);
RunReport run_mas_central(const EngineContext& ctx, RunBudget& budget);
RunReport run_mas_hybrid(const EngineContext& ctx, RunBudget& budget);

RunReport run_engine(Architecture architecture, const EngineContext& ctx, RunBudget& budget);

/// Maximum under (validated desc, confidence desc, source_index asc, CWE asc).
/// Throws std::invalid_argument on an empty list.
const BranchResult& select_best(std::span<const BranchResult> results);

/// Strict ordering used by select_best: true when `a` ranks ahead of `b`.
bool branch_ranks_before(const BranchResult& a, const BranchResult& b);

void to_json(nlohmann::json& j, const ValidationAttempt& a);
void from_json(const nlohmann::json& j, ValidationAttempt& a);
void to_json(nlohmann::json& j, const BranchResult& b);
void from_json(const nlohmann::json& j, BranchResult& b);
void to_json(nlohmann::json& j, const EmittedClaim& c);
void from_json(const nlohmann::json& j, EmittedClaim& c);
void to_json(nlohmann::json& j, const InvocationRecord& r);
void from_json(const nlohmann::json& j, InvocationRecord& r);
/// Report JSON excludes invocations (persisted separately as messages).
void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

}  // namespace topobench
