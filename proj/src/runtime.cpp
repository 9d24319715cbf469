#include "topobench/runtime.hpp"

#include <condition_variable>
#include <regex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace topobench {

using nlohmann::json;

RunBudget::RunBudget(double outer_timeout_s, double tool_cap_s, std::optional<double> max_cost, CostFn cost_fn)
    : start_(Clock::now()),
      deadline_(start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(outer_timeout_s))),
      tool_cap_s_(tool_cap_s),
      max_cost_(max_cost),
      cost_fn_(std::move(cost_fn)) {}

double RunBudget::remaining_seconds() const {
  return std::chrono::duration<double>(deadline_ - Clock::now()).count();
}

double RunBudget::elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

bool RunBudget::expired() const { return Clock::now() >= deadline_; }

bool RunBudget::cost_exhausted() const {
  if (!max_cost_ || !cost_fn_) return false;
  std::lock_guard lock(mu_);
  return cost_fn_(spent_) >= *max_cost_;
}

void RunBudget::charge(const TokenUsage& usage) {
  std::lock_guard lock(mu_);
  spent_ += usage;
}

TokenUsage RunBudget::spent() const {
  std::lock_guard lock(mu_);
  return spent_;
}

std::string_view to_string(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::ok: return "ok";
    case OutcomeStatus::transport_error: return "transport_error";
    case OutcomeStatus::timeout: return "timeout";
  }
  return "?";
}

const std::string& system_prompt_for(const PromptBundle& bundle, Role role) {
  switch (role) {
    case Role::sandbox: return bundle.sandbox_system;
    case Role::validator: return bundle.validator_system;
    case Role::scanner:
    case Role::planner: break;
  }
  return bundle.main_system;
}

std::string scan_instruction() {
  return "Report format: finish with one JSON object "
         "{\"findings\": [{\"cwe\": \"CWE-<id>\", \"title\": str, \"confidence\": 0..1, \"evidence\": str, "
         "\"poc\": str}]} listing findings in priority order. To run a sandbox command instead, reply with "
         "{\"tool_call\": {\"command\": str}}.";
}

std::string validation_instruction(const Claim& claim, const std::string& endpoint) {
  return fmt::format(
      "Validate the following reported vulnerability against {}.\n{}\nReport format: finish with one JSON "
      "object {{\"verdict\": \"Confirmed\"|\"Rejected\"|\"Inconclusive\", \"evidence\": str}}. To run a sandbox "
      "command instead, reply with {{\"tool_call\": {{\"command\": str}}}}.",
      endpoint, json(claim).dump());
}

namespace {

std::optional<json> extract_json_object(const std::string& content) {
  auto try_parse = [](std::string_view text) -> std::optional<json> {
    auto j = json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(content)) return j;
  const auto fence = content.find("```json");
  if (fence != std::string::npos) {
    const auto body = content.find('\n', fence);
    const auto end = body == std::string::npos ? std::string::npos : content.find("```", body);
    if (end != std::string::npos) {
      if (auto j = try_parse(std::string_view(content).substr(body + 1, end - body - 1))) return j;
    }
  }
  const auto first = content.find('{');
  const auto last = content.rfind('}');
  if (first != std::string::npos && last != std::string::npos && last > first) {
    return try_parse(std::string_view(content).substr(first, last - first + 1));
  }
  return std::nullopt;
}

std::optional<AttemptVerdict> verdict_from_text(const std::string& content) {
  static const std::regex word(R"(\b(confirmed|rejected|inconclusive)\b)", std::regex::icase);
  std::optional<AttemptVerdict> last;
  for (auto it = std::sregex_iterator(content.begin(), content.end(), word); it != std::sregex_iterator(); ++it) {
    last = parse_attempt_verdict((*it)[1].str());
  }
  return last;
}

struct CallState {
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  std::optional<AgentReply> reply;
  std::string error;
};

enum class CallResult { ok, transport_error, timeout };

CallResult call_with_deadline(const std::shared_ptr<AgentBackend>& backend, AgentRequest request,
                              const RunBudget& budget, AgentReply& reply, std::string& error) {
  auto state = std::make_shared<CallState>();
  std::stop_source call_stop;
  request.stop = call_stop.get_token();
  request.deadline = budget.deadline();
  std::thread worker([backend, state, request = std::move(request)]() {
    std::optional<AgentReply> r;
    std::string err;
    try {
      r = backend->complete(request);
    } catch (const std::exception& e) {
      err = e.what();
    } catch (...) {
      err = "unknown backend failure";
    }
    std::lock_guard lock(state->mu);
    state->reply = std::move(r);
    state->error = std::move(err);
    state->done = true;
    state->cv.notify_all();
  });

  bool finished = false;
  {
    const std::stop_callback wake(budget.stop_token(), [&state] {
      std::lock_guard lock(state->mu);
      state->cv.notify_all();
    });
    std::unique_lock lock(state->mu);
    finished = state->cv.wait_until(lock, budget.deadline(),
                                    [&] { return state->done || budget.stop_requested(); }) &&
               state->done;
  }
  if (!finished) {
    call_stop.request_stop();
    std::unique_lock lock(state->mu);
    const bool settled = state->cv.wait_for(lock, std::chrono::milliseconds(200), [&] { return state->done; });
    lock.unlock();
    if (settled) {
      worker.join();
    } else {
      worker.detach();
    }
    return CallResult::timeout;
  }
  worker.join();
  if (!state->reply) {
    error = state->error;
    return CallResult::transport_error;
  }
  reply = std::move(*state->reply);
  return CallResult::ok;
}

std::string format_tool_result(const ToolCallRecord& call) {
  const auto& r = call.result;
  std::string status = r.status == ToolStatus::timeout ? "timeout" : "exit " + std::to_string(r.exit_status);
  return fmt::format("Tool result ({}, {:.2f}s{}):\n[stdout]\n{}\n[stderr]\n{}", status, r.duration,
                     r.truncated ? ", truncated" : "", r.stdout_text, r.stderr_text);
}

}  // namespace

ParsedReply parse_agent_reply(const std::string& content) {
  ParsedReply parsed;
  if (const auto obj = extract_json_object(content)) {
    if (obj->contains("tool_call")) {
      const auto& call = obj->at("tool_call");
      if (call.is_string()) {
        parsed.tool_command = call.get<std::string>();
      } else if (call.is_object() && call.contains("command") && call.at("command").is_string()) {
        parsed.tool_command = call.at("command").get<std::string>();
      }
    }
    if (obj->contains("findings") && obj->at("findings").is_array()) {
      std::vector<Claim> claims;
      for (const auto& f : obj->at("findings")) {
        if (!f.is_object() || !f.contains("cwe") || !f.at("cwe").is_string()) continue;
        try {
          claims.push_back(f.get<Claim>());
        } catch (const std::exception&) {
          // Entries without a recognisable CWE are not claims.
        }
      }
      parsed.findings = std::move(claims);
    }
    if (obj->contains("verdict") && obj->at("verdict").is_string()) {
      try {
        parsed.verdict = parse_attempt_verdict(obj->at("verdict").get<std::string>());
      } catch (const ParseError&) {
      }
    }
    if (obj->contains("evidence") && obj->at("evidence").is_string()) {
      parsed.evidence = obj->at("evidence").get<std::string>();
    }
  }
  if (!parsed.verdict) {
    parsed.verdict = verdict_from_text(content);
    if (parsed.verdict && parsed.evidence.empty()) parsed.evidence = content.substr(0, 2000);
  }
  return parsed;
}

AgentOutcome invoke_agent(const std::shared_ptr<AgentBackend>& backend, const PromptBundle& bundle, Role role,
                          RunBudget& budget, const InvokeOptions& options,
                          const std::optional<TargetContext>& target) {
  if (!backend) throw ConfigError("no backend bound for role " + std::string(to_string(role)));
  if (!backend->supports(role)) {
    throw ConfigError("backend " + backend->identity() + " does not support role " + std::string(to_string(role)));
  }
  if (budget.expired() || budget.stop_requested()) throw BudgetExhausted("run deadline already reached");
  if (budget.cost_exhausted()) throw BudgetExhausted("run cost cap already reached");

  const auto started = Clock::now();
  AgentOutcome outcome;
  outcome.transcript.push_back({"system", system_prompt_for(bundle, role)});
  outcome.transcript.push_back({"user", bundle.user});
  if (options.claim) {
    outcome.transcript.push_back({"user", validation_instruction(*options.claim, target ? target->endpoint : "")});
  } else {
    outcome.transcript.push_back({"user", scan_instruction()});
  }

  for (int turn = 0;; ++turn) {
    if (budget.expired() || budget.stop_requested()) {
      outcome.status = OutcomeStatus::timeout;
      outcome.error = "deadline reached";
      break;
    }
    AgentRequest request;
    request.role = role;
    request.slot = options.slot;
    request.messages = outcome.transcript;
    request.target = target;
    request.claim = options.claim;
    request.seed = options.seed;
    request.turn = turn;

    AgentReply reply;
    std::string error;
    const auto result = call_with_deadline(backend, std::move(request), budget, reply, error);
    if (result == CallResult::timeout) {
      outcome.status = OutcomeStatus::timeout;
      outcome.error = "deadline reached during agent call";
      break;
    }
    if (result == CallResult::transport_error) {
      outcome.status = OutcomeStatus::transport_error;
      outcome.error = error;
      break;
    }
    outcome.usage += reply.usage;
    budget.charge(reply.usage);
    outcome.transcript.push_back({"assistant", reply.content});

    auto parsed = parse_agent_reply(reply.content);
    if (parsed.tool_command && turn < options.max_tool_turns) {
      const double cap = std::min(budget.tool_cap_seconds(), budget.remaining_seconds());
      if (cap <= 0.0) {
        outcome.status = OutcomeStatus::timeout;
        outcome.error = "deadline reached before tool call";
        break;
      }
      ToolCallRecord call{*parsed.tool_command, {}};
      try {
        call.result = execute_tool(call.command, std::min(cap, kMaxToolCapSeconds), {options.scratch_dir});
      } catch (const SandboxUnavailable& e) {
        outcome.status = OutcomeStatus::transport_error;
        outcome.error = std::string("sandbox unavailable: ") + e.what();
        break;
      }
      outcome.transcript.push_back({"user", format_tool_result(call)});
      outcome.tool_calls.push_back(std::move(call));
      continue;
    }
    if (parsed.findings) outcome.claims = std::move(*parsed.findings);
    if (options.claim) {
      outcome.verdict = parsed.verdict.value_or(AttemptVerdict::inconclusive);
      outcome.evidence = parsed.evidence;
    }
    break;
  }
  outcome.wall_time = std::chrono::duration<double>(Clock::now() - started).count();
  return outcome;
}

void to_json(json& j, const Message& m) { j = {{"role", m.role}, {"content", m.content}}; }

void from_json(const json& j, Message& m) {
  m.role = j.at("role").get<std::string>();
  m.content = j.at("content").get<std::string>();
}

}  // namespace topobench
