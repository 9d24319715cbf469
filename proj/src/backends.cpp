#include "topobench/backends.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "topobench/endpoint.hpp"
#include "topobench/net.hpp"
#include "topobench/rng.hpp"

namespace topobench {

using nlohmann::json;

namespace {

/// Sleeps for `seconds` unless the token fires first. Returns false when interrupted.
bool interruptible_sleep(double seconds, const std::stop_token& stop) {
  if (seconds <= 0) return true;
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  return !cv.wait_for(lock, stop, std::chrono::duration<double>(seconds), [] { return false; });
}

std::string verdict_word(AttemptVerdict v) {
  switch (v) {
    case AttemptVerdict::confirmed: return "Confirmed";
    case AttemptVerdict::rejected: return "Rejected";
    case AttemptVerdict::inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::string identity, ScriptedBehavior fallback)
    : identity_(std::move(identity)), fallback_(std::move(fallback)) {}

ScriptedBackend& ScriptedBackend::on_slot(const std::string& slot, ScriptedBehavior behavior) {
  by_slot_[slot] = std::move(behavior);
  return *this;
}

ScriptedBackend& ScriptedBackend::on_role(Role role, ScriptedBehavior behavior) {
  by_role_[role] = std::move(behavior);
  return *this;
}

const ScriptedBehavior& ScriptedBackend::lookup(const AgentRequest& request) const {
  if (const auto it = by_slot_.find(request.slot); it != by_slot_.end()) return it->second;
  if (const auto it = by_role_.find(request.role); it != by_role_.end()) return it->second;
  return fallback_;
}

std::string ScriptedBackend::render_reply(const ScriptedBehavior& behavior, const AgentRequest& request) {
  if (request.turn < static_cast<int>(behavior.tool_commands.size())) {
    return json{{"tool_call", {{"command", behavior.tool_commands[static_cast<std::size_t>(request.turn)]}}}}.dump();
  }
  if (request.claim) {
    const auto it = behavior.verdicts.find(request.claim->cwe);
    const auto verdict = it == behavior.verdicts.end() ? behavior.default_verdict : it->second;
    return json{{"verdict", verdict_word(verdict)}, {"evidence", behavior.evidence}}.dump();
  }
  return json{{"findings", behavior.claims}}.dump();
}

AgentReply ScriptedBackend::complete(const AgentRequest& request) {
  const auto& behavior = lookup(request);
  if (!interruptible_sleep(behavior.stall_seconds, request.stop)) {
    throw TransportError("scripted stall interrupted");
  }
  if (behavior.transport_error) throw TransportError("scripted transport failure");
  return {render_reply(behavior, request), behavior.usage};
}

// ---------------------------------------------------------------------------
// StochasticBackend

StochasticBackend::StochasticBackend(StochasticConfig config) : config_(std::move(config)) {
  if (config_.decoy_cwes.empty()) config_.decoy_cwes = {"CWE-79"};
}

const SimulatedTarget* StochasticBackend::find_target(const std::string& endpoint) const {
  for (const auto& t : config_.targets) {
    if (t.endpoint == endpoint) return &t;
  }
  return nullptr;
}

AgentReply StochasticBackend::complete(const AgentRequest& request) {
  const std::string endpoint = request.target ? request.target->endpoint : "";
  const Mode mode = request.target ? request.target->mode : Mode::blackbox;
  // keyed by target id: mock endpoints bind ephemeral ports
  const std::string target_id = request.target ? request.target->target_id : "";
  const std::string key = fmt::format("{}|{}|{}|{}|{}|{}", config_.identity, request.seed, request.slot,
                                      to_string(request.role), to_string(mode), target_id);
  auto draw = [&](std::string_view what) { return keyed_uniform(config_.seed, key + "|" + std::string(what)); };

  const double jitter_in = 0.75 + 0.5 * draw("usage-in");
  const double jitter_out = 0.75 + 0.5 * draw("usage-out");
  TokenUsage usage{static_cast<std::uint64_t>(std::llround(static_cast<double>(config_.base_usage.input_tokens) * jitter_in)),
                   static_cast<std::uint64_t>(std::llround(static_cast<double>(config_.base_usage.output_tokens) * jitter_out))};

  const auto* target = find_target(endpoint);
  if (request.claim) {
    const bool works = target != nullptr && request.claim->cwe == target->truth_cwe &&
                       request.claim->poc == target->exploit_poc &&
                       draw("validate|" + request.claim->cwe) < config_.p_validate;
    json reply = {{"verdict", works ? "Confirmed" : "Rejected"},
                  {"evidence", works ? "simulated impact signal observed for " + request.claim->cwe
                                     : "PoC did not produce an impact signal"}};
    return {reply.dump(), usage};
  }

  const auto decoy_index = static_cast<std::size_t>(draw("decoy") * static_cast<double>(config_.decoy_cwes.size()));
  Claim decoy{config_.decoy_cwes[std::min(decoy_index, config_.decoy_cwes.size() - 1)], "suspected weakness",
              0.4 + 0.3 * draw("decoy-confidence"), "pattern match without runtime confirmation", "benign-probe"};
  std::vector<Claim> claims;
  if (target == nullptr) {
    claims.push_back(decoy);
  } else {
    Claim truth{target->truth_cwe, "primary weakness", 0.7 + 0.25 * draw("truth-confidence"),
                "input reaches a sensitive sink unsanitised", target->exploit_poc};
    const double p = mode == Mode::whitebox ? config_.p_white : config_.p_black;
    if (draw("scan") < p) {
      claims = {truth, decoy};
    } else {
      claims = {decoy};
      if (draw("near-miss") < 0.5) {
        truth.poc.reset();
        truth.confidence = 0.3;
        claims.push_back(truth);
      }
    }
  }
  return {json{{"findings", claims}}.dump(), usage};
}

// ---------------------------------------------------------------------------
// ReplayValidatorBackend

ReplayValidatorBackend::ReplayValidatorBackend(std::string impact_marker, double request_timeout_s)
    : marker_(std::move(impact_marker)), timeout_s_(request_timeout_s) {}

AgentReply ReplayValidatorBackend::complete(const AgentRequest& request) {
  auto answer = [](std::string_view verdict, std::string evidence) {
    return AgentReply{json{{"verdict", verdict}, {"evidence", std::move(evidence)}}.dump(), {}};
  };
  if (!request.claim) return {json{{"findings", json::array()}}.dump(), {}};
  if (!request.claim->poc || request.claim->poc->empty()) return answer("Inconclusive", "no PoC supplied");
  if (!request.target) return answer("Inconclusive", "no target endpoint");
  const auto ep = parse_endpoint(request.target->endpoint);
  if (!ep) return answer("Inconclusive", "unparsable endpoint");

  const auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s_ * 1000));
  std::string response;
  if (ep->scheme == "tcp") {
    const auto line = net::tcp_exchange_line(ep->host, ep->port, *request.claim->poc, timeout);
    if (!line) return answer("Inconclusive", "target did not answer");
    response = *line;
  } else {
    httplib::Client client(ep->origin());
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    const auto res = client.Post(ep->path, *request.claim->poc, "application/x-www-form-urlencoded");
    if (!res) return answer("Inconclusive", "target did not answer: " + httplib::to_string(res.error()));
    response = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 512);
  }
  if (response.find(marker_) != std::string::npos) return answer("Confirmed", response);
  return answer("Rejected", response);
}

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw ConfigError("remote backend " + config_.identity + ": base_url required");
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("remote backend " + config_.identity + ": environment variable " + config_.api_key_env +
                        " is not set");
    }
    api_key_ = key;
  }
}

json RemoteBackend::build_request(const RemoteConfig& config, const std::vector<Message>& messages) {
  json body = config.pass_through.is_object() ? config.pass_through : json::object();
  body["model"] = config.model;
  body["messages"] = messages;
  return body;
}

AgentReply RemoteBackend::parse_response(const json& body) {
  auto text_of = [](const json& content) -> std::optional<std::string> {
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
      std::string out;
      for (const auto& part : content) {
        if (part.is_object() && part.contains("text") && part.at("text").is_string()) {
          out += part.at("text").get<std::string>();
        }
      }
      return out;
    }
    return std::nullopt;
  };
  std::optional<std::string> content;
  if (body.contains("choices") && body.at("choices").is_array() && !body.at("choices").empty()) {
    const auto& choice = body.at("choices").at(0);
    if (choice.contains("message") && choice.at("message").contains("content")) {
      content = text_of(choice.at("message").at("content"));
    }
  }
  if (!content && body.contains("message") && body.at("message").is_object() && body.at("message").contains("content")) {
    content = text_of(body.at("message").at("content"));
  }
  if (!content && body.contains("content")) content = text_of(body.at("content"));
  if (!content) throw TransportError("response carries no message content");

  AgentReply reply{*content, {}};
  if (body.contains("usage") && body.at("usage").is_object()) {
    const auto& u = body.at("usage");
    auto count = [&u](const char* a, const char* b) -> std::uint64_t {
      if (u.contains(a) && u.at(a).is_number_integer()) return u.at(a).get<std::uint64_t>();
      if (u.contains(b) && u.at(b).is_number_integer()) return u.at(b).get<std::uint64_t>();
      return 0;
    };
    reply.usage = {count("input_tokens", "prompt_tokens"), count("output_tokens", "completion_tokens")};
  }
  return reply;
}

AgentReply RemoteBackend::complete(const AgentRequest& request) {
  const std::string payload = build_request(config_, request.messages).dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  double backoff = config_.initial_backoff_s;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      if (!interruptible_sleep(backoff, request.stop)) break;
      backoff *= 2;
    }
    if (request.stop.stop_requested()) break;
    const double left = std::chrono::duration<double>(request.deadline - Clock::now()).count();
    const double timeout = request.deadline == Clock::time_point{} ? config_.request_timeout_s
                                                                   : std::min(config_.request_timeout_s, left);
    if (timeout <= 0) break;

    httplib::Client client(config_.base_url);
    const auto ms = std::chrono::milliseconds(static_cast<long long>(timeout * 1000));
    client.set_connection_timeout(ms);
    client.set_read_timeout(ms);
    client.set_write_timeout(ms);
    const auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 256));
    }
    auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded()) throw TransportError("response is not JSON");
    return parse_response(body);
  }
  throw TransportError(config_.identity + ": giving up after retries (" + last_error + ")");
}

// ---------------------------------------------------------------------------
// RecordingBackend

AgentReply RecordingBackend::complete(const AgentRequest& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  return inner_->complete(request);
}

std::vector<AgentRequest> RecordingBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace topobench
