#include "topobench/topology.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <stdexcept>

#include "topobench/cwe.hpp"

namespace topobench {

using nlohmann::json;

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::failed_placeholder: return "failed_placeholder";
    case RunStatus::infra_error: return "infra_error";
  }
  return "completed";
}

RunStatus parse_run_status(std::string_view s) {
  for (auto v : {RunStatus::completed, RunStatus::failed_placeholder, RunStatus::infra_error}) {
    if (to_string(v) == s) return v;
  }
  throw ParseError("status", "unknown run status '" + std::string(s) + "'");
}

std::vector<std::size_t> effective_confirmations(std::span<const ValidationAttempt> attempts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    if (attempts[i].verdict != AttemptVerdict::confirmed) continue;
    bool overruled = false;
    for (std::size_t k = i + 1; k < attempts.size(); ++k) {
      if (attempts[k].recheck && attempts[k].claim.cwe == attempts[i].claim.cwe &&
          attempts[k].verdict != AttemptVerdict::confirmed) {
        overruled = true;
        break;
      }
    }
    if (!overruled) out.push_back(i);
  }
  return out;
}

bool branch_ranks_before(const BranchResult& a, const BranchResult& b) {
  if (a.validated != b.validated) return a.validated;
  if (a.confidence() != b.confidence()) return a.confidence() > b.confidence();
  if (a.source_index != b.source_index) return a.source_index < b.source_index;
  const std::string ca = a.report_claim ? a.report_claim->cwe : "";
  const std::string cb = b.report_claim ? b.report_claim->cwe : "";
  if (ca.empty() != cb.empty()) return !ca.empty();
  return cwe_less(ca, cb);
}

const BranchResult& select_best(std::span<const BranchResult> results) {
  if (results.empty()) throw std::invalid_argument("select_best: empty result list");
  const BranchResult* best = &results.front();
  for (const auto& r : results.subspan(1)) {
    if (branch_ranks_before(r, *best)) best = &r;
  }
  return *best;
}

namespace {

// Per-branch scratch state. Each concurrent branch owns one lane; lanes are
// merged in branch order so reports do not depend on thread scheduling.
struct Lane {
  std::vector<InvocationRecord> invocations;
  std::vector<EmittedClaim> emitted;
  std::vector<ValidationAttempt> attempts;
  TokenUsage usage;
  bool infra = false;
  bool cost_stop = false;
  std::string error;

  bool halted() const { return infra || cost_stop; }
};

std::shared_ptr<AgentBackend> or_fallback(const std::shared_ptr<AgentBackend>& a,
                                          const std::shared_ptr<AgentBackend>& b) {
  return a ? a : b;
}

class Engine {
 public:
  Engine(const EngineContext& ctx, RunBudget& budget) : ctx_(ctx), budget_(budget) {}

  std::optional<AgentOutcome> invoke(Lane& lane, const std::shared_ptr<AgentBackend>& backend, Role role,
                                     const std::string& slot, const std::optional<Claim>& claim) {
    if (lane.halted()) return std::nullopt;
    InvokeOptions opts;
    opts.slot = slot;
    opts.claim = claim;
    opts.seed = ctx_.options.seed;
    opts.max_tool_turns = ctx_.options.max_tool_turns;
    opts.scratch_dir = ctx_.options.scratch_dir;

    InvocationRecord rec;
    rec.slot = slot;
    rec.role = role;
    rec.started = budget_.elapsed();
    AgentOutcome out;
    try {
      out = invoke_agent(backend, ctx_.prompts, role, budget_, opts, ctx_.target);
    } catch (const BudgetExhausted& e) {
      if (budget_.cost_exhausted() && !budget_.expired() && !budget_.stop_requested()) {
        lane.cost_stop = true;
      } else {
        lane.infra = true;
        lane.error = slot + ": " + e.what();
      }
      return std::nullopt;
    }
    rec.ended = std::max(rec.started, budget_.elapsed());
    rec.status = out.status;
    rec.error = out.error;
    rec.usage = out.usage;
    rec.messages = out.transcript;
    for (const auto& t : out.tool_calls) rec.tool_commands.push_back(t.command);
    lane.usage += out.usage;
    lane.invocations.push_back(std::move(rec));
    if (out.status != OutcomeStatus::ok) {
      lane.infra = true;
      lane.error = slot + ": " + std::string(to_string(out.status)) + (out.error.empty() ? "" : ": " + out.error);
      return std::nullopt;
    }
    return out;
  }

  std::optional<std::vector<Claim>> scan(Lane& lane, const std::shared_ptr<AgentBackend>& backend, Role role,
                                         const std::string& slot) {
    auto out = invoke(lane, backend, role, slot, std::nullopt);
    if (!out) return std::nullopt;
    for (const auto& c : out->claims) lane.emitted.push_back({slot, c});
    return std::move(out->claims);
  }

  std::optional<ValidationAttempt> validate(Lane& lane, const std::shared_ptr<AgentBackend>& backend, Role role,
                                            const std::string& slot, const Claim& claim, bool recheck) {
    const double started = budget_.elapsed();
    auto out = invoke(lane, backend, role, slot, claim);
    if (!out) return std::nullopt;
    ValidationAttempt a;
    a.claim = claim;
    a.verdict = out->verdict.value_or(AttemptVerdict::inconclusive);
    a.evidence = out->evidence;
    // A confirmation must carry evidence.
    if (a.verdict == AttemptVerdict::confirmed && a.evidence.empty()) a.verdict = AttemptVerdict::inconclusive;
    a.started = started;
    a.ended = std::max(started, budget_.elapsed());
    a.source = slot;
    a.recheck = recheck;
    lane.attempts.push_back(a);
    return a;
  }

  /// SAS procedure on one lane: scan, then validate in order until the first confirmation.
  BranchResult sas_branch(Lane& lane, const std::string& prefix, int index) {
    BranchResult br;
    br.source = prefix;
    br.source_index = index;
    auto claims = scan(lane, scanner(), Role::scanner, prefix == "sas" ? "sas/scanner" : prefix);
    if (claims) {
      for (const auto& c : *claims) {
        auto a = validate(lane, validator(), Role::validator, prefix + "/validator", c, false);
        if (!a) break;
        if (a->verdict == AttemptVerdict::confirmed) {
          br.report_claim = c;
          br.validated = true;
          break;
        }
      }
      if (!br.validated && !claims->empty()) br.report_claim = claims->front();
    }
    br.attempts = lane.attempts;
    br.usage = lane.usage;
    br.infra_failed = lane.infra;
    return br;
  }

  std::shared_ptr<AgentBackend> scanner() const { return ctx_.agents.scanner; }
  std::shared_ptr<AgentBackend> validator() const { return ctx_.agents.validator; }
  std::shared_ptr<AgentBackend> planner() const { return or_fallback(ctx_.agents.planner, ctx_.agents.scanner); }
  std::shared_ptr<AgentBackend> specialist() const {
    return or_fallback(ctx_.agents.specialist, ctx_.agents.scanner);
  }

  /// Runs fn(i, lanes[i]) for every lane, concurrently when enabled.
  template <typename Fn>
  auto fan_out(std::vector<Lane>& lanes, Fn fn) {
    using R = std::invoke_result_t<Fn, int, Lane&>;
    std::vector<R> results;
    if (!ctx_.options.parallel_branches || lanes.size() < 2) {
      for (std::size_t i = 0; i < lanes.size(); ++i) results.push_back(fn(static_cast<int>(i), lanes[i]));
      return results;
    }
    std::vector<std::future<R>> futures;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      futures.push_back(std::async(std::launch::async, fn, static_cast<int>(i), std::ref(lanes[i])));
    }
    // Settle every branch before rethrowing so no thread outlives the engine.
    std::exception_ptr first_error;
    for (auto& f : futures) {
      try {
        results.push_back(f.get());
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
  }

  RunReport begin(Architecture arch) const {
    RunReport r;
    r.run_id = ctx_.run_id;
    r.architecture = arch;
    return r;
  }

  void absorb(RunReport& r, const Lane& lane) const {
    r.invocations.insert(r.invocations.end(), lane.invocations.begin(), lane.invocations.end());
    r.emitted.insert(r.emitted.end(), lane.emitted.begin(), lane.emitted.end());
    r.attempts.insert(r.attempts.end(), lane.attempts.begin(), lane.attempts.end());
    r.usage_total += lane.usage;
    if (lane.infra && r.error.empty()) r.error = lane.error;
  }

  void finish(RunReport& r) const {
    const auto eff = effective_confirmations(r.attempts);
    if (!eff.empty()) {
      auto best = std::min_element(eff.begin(), eff.end(), [&](std::size_t a, std::size_t b) {
        return r.attempts[a].ended < r.attempts[b].ended;
      });
      r.ttfv_attempt = *best;
      r.ttfv = r.attempts[*best].ended;
    }
    if (r.status == RunStatus::failed_placeholder) r.validated = false;
    r.wall_time = budget_.elapsed();
    if (r.ttfv && *r.ttfv > r.wall_time) r.wall_time = *r.ttfv;
  }

  const EngineContext& ctx_;
  RunBudget& budget_;
};

RunReport infra_report(RunReport r, std::string error) {
  r.status = RunStatus::infra_error;
  r.selected.reset();
  r.validated = false;
  if (r.error.empty()) r.error = std::move(error);
  return r;
}

}  // namespace

RunReport run_sas(const EngineContext& ctx, RunBudget& budget) {
  Engine e(ctx, budget);
  RunReport r = e.begin(Architecture::sas);
  Lane lane;
  BranchResult br = e.sas_branch(lane, "sas", 0);
  e.absorb(r, lane);
  r.branch_results.push_back(br);
  if (lane.infra) {
    r = infra_report(std::move(r), lane.error);
  } else if (br.validated) {
    r.selected = br.report_claim;
    r.validated = true;
    r.status = RunStatus::completed;
  } else {
    r.status = RunStatus::failed_placeholder;
  }
  e.finish(r);
  return r;
}

RunReport run_mas_indep(const EngineContext& ctx, RunBudget& budget) {
  Engine e(ctx, budget);
  RunReport r = e.begin(Architecture::mas_indep);
  std::vector<Lane> lanes(3);
  auto results = e.fan_out(lanes, [&](int i, Lane& lane) {
    return e.sas_branch(lane, "indep/worker-" + std::to_string(i + 1), i);
  });
  std::vector<BranchResult> healthy;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    e.absorb(r, lanes[i]);
    if (!results[i].infra_failed) healthy.push_back(results[i]);
  }
  r.branch_results = results;
  if (healthy.empty()) {
    r = infra_report(std::move(r), "all workers failed");
  } else {
    const auto& best = select_best(healthy);
    r.selected = best.report_claim;
    r.validated = best.validated;
    r.status = best.report_claim ? RunStatus::completed : RunStatus::failed_placeholder;
  }
  e.finish(r);
  return r;
}

RunReport run_mas_decent(const EngineContext& ctx, RunBudget& budget) {
  Engine e(ctx, budget);
  RunReport r = e.begin(Architecture::mas_decent);
  std::vector<Lane> lanes(3);
  auto votes = e.fan_out(lanes, [&](int i, Lane& lane) {
    BranchResult br;
    br.source = "decent/peer-" + std::to_string(i + 1);
    br.source_index = i;
    auto claims = e.scan(lane, e.scanner(), Role::scanner, br.source);
    if (claims && !claims->empty()) br.report_claim = claims->front();
    br.usage = lane.usage;
    br.infra_failed = lane.infra;
    return br;
  });
  bool any_healthy = false;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    e.absorb(r, lanes[i]);
    any_healthy = any_healthy || !votes[i].infra_failed;
  }
  r.branch_results = votes;
  if (!any_healthy) {
    r = infra_report(std::move(r), "all peers failed");
    e.finish(r);
    return r;
  }

  // Tally top-1 votes: count desc, mean confidence desc, CWE id asc.
  struct Tally {
    std::string cwe;
    int count = 0;
    double conf_sum = 0.0;
    Claim claim;  // the most confident voter's claim, earliest peer on ties
  };
  std::vector<Tally> tally;
  for (const auto& v : votes) {
    if (v.infra_failed || !v.report_claim) continue;
    const Claim& c = *v.report_claim;
    auto it = std::find_if(tally.begin(), tally.end(), [&](const Tally& t) { return t.cwe == c.cwe; });
    if (it == tally.end()) {
      tally.push_back({c.cwe, 1, c.confidence, c});
    } else {
      ++it->count;
      it->conf_sum += c.confidence;
      if (c.confidence > it->claim.confidence) it->claim = c;
    }
  }
  std::stable_sort(tally.begin(), tally.end(), [](const Tally& a, const Tally& b) {
    if (a.count != b.count) return a.count > b.count;
    const double ma = a.conf_sum / a.count, mb = b.conf_sum / b.count;
    if (ma != mb) return ma > mb;
    return cwe_less(a.cwe, b.cwe);
  });
  if (tally.empty()) {
    r.status = RunStatus::failed_placeholder;
    e.finish(r);
    return r;
  }

  Lane lane;
  r.selected = tally.front().claim;
  for (std::size_t k = 0; k < std::min<std::size_t>(2, tally.size()); ++k) {
    auto a = e.validate(lane, e.validator(), Role::validator, "decent/validator", tally[k].claim, false);
    if (!a) break;
    if (a->verdict == AttemptVerdict::confirmed) {
      r.selected = tally[k].claim;
      r.validated = true;
      break;
    }
  }
  e.absorb(r, lane);
  if (lane.infra) {
    r = infra_report(std::move(r), lane.error);
  } else {
    r.status = RunStatus::completed;
  }
  e.finish(r);
  return r;
}

RunReport run_mas_central(const EngineContext& ctx, RunBudget& budget) {
  Engine e(ctx, budget);
  RunReport r = e.begin(Architecture::mas_central);
  Lane lane;
  BranchResult br;
  br.source = "central";
  auto plan = e.scan(lane, e.planner(), Role::planner, "central/planner");
  if (plan && !plan->empty()) {
    const Claim top = plan->front();
    br.report_claim = top;
    auto a = e.validate(lane, e.specialist(), Role::sandbox, "central/specialist", top, false);
    if (a && a->verdict == AttemptVerdict::confirmed) {
      auto re = e.validate(lane, e.validator(), Role::validator, "central/recheck", top, true);
      br.validated = re && re->verdict == AttemptVerdict::confirmed;
    }
  }
  br.attempts = lane.attempts;
  br.usage = lane.usage;
  br.infra_failed = lane.infra;
  e.absorb(r, lane);
  r.branch_results.push_back(br);
  if (lane.infra) {
    r = infra_report(std::move(r), lane.error);
  } else if (!br.report_claim) {
    r.status = RunStatus::failed_placeholder;
  } else {
    r.selected = br.report_claim;
    r.validated = br.validated;
    r.status = RunStatus::completed;
  }
  e.finish(r);
  return r;
}

RunReport run_mas_hybrid(const EngineContext& ctx, RunBudget& budget) {
  Engine e(ctx, budget);
  RunReport r = e.begin(Architecture::mas_hybrid);

  std::vector<Lane> scan_lanes(2);
  auto lists = e.fan_out(scan_lanes, [&](int i, Lane& lane) {
    return i == 0 ? e.scan(lane, e.planner(), Role::planner, "hybrid/orchestrator")
                  : e.scan(lane, e.specialist(), Role::sandbox, "hybrid/sandbox");
  });
  for (const auto& l : scan_lanes) e.absorb(r, l);
  if (scan_lanes[0].infra && scan_lanes[1].infra) {
    r = infra_report(std::move(r), "both branches failed");
    e.finish(r);
    return r;
  }

  std::optional<Claim> primary, alternate;
  if (lists[0] && !lists[0]->empty()) primary = lists[0]->front();
  if (lists[1] && !lists[1]->empty()) {
    const auto& sb = *lists[1];
    alternate = sb.front();
    if (primary && ctx.options.hybrid_alternate == AlternatePolicy::first_differing_cwe) {
      auto it = std::find_if(sb.begin(), sb.end(), [&](const Claim& c) { return c.cwe != primary->cwe; });
      if (it != sb.end()) alternate = *it;
    }
  }
  if (!primary && !alternate) {
    r.status = RunStatus::failed_placeholder;
    e.finish(r);
    return r;
  }

  const std::optional<Claim> picks[2] = {primary, alternate};
  std::vector<Lane> val_lanes(2);
  auto branches = e.fan_out(val_lanes, [&](int i, Lane& lane) {
    BranchResult br;
    br.source = i == 0 ? "hybrid/primary" : "hybrid/secondary";
    br.source_index = i;
    br.report_claim = picks[i];
    br.infra_failed = scan_lanes[static_cast<std::size_t>(i)].infra;
    if (picks[i]) {
      auto a = e.validate(lane, e.validator(), Role::validator, br.source + "-validator", *picks[i], false);
      br.validated = a && a->verdict == AttemptVerdict::confirmed;
    }
    br.attempts = lane.attempts;
    br.usage = scan_lanes[static_cast<std::size_t>(i)].usage + lane.usage;
    br.infra_failed = br.infra_failed || lane.infra;
    return br;
  });
  for (const auto& l : val_lanes) e.absorb(r, l);

  std::vector<BranchResult> healthy;
  for (const auto& b : branches) {
    if (!b.infra_failed && b.report_claim) healthy.push_back(b);
  }
  r.branch_results = branches;
  if (healthy.empty()) {
    const bool any_infra = branches[0].infra_failed || branches[1].infra_failed;
    if (any_infra) {
      r = infra_report(std::move(r), "no usable branch");
    } else {
      r.status = RunStatus::failed_placeholder;
    }
    e.finish(r);
    return r;
  }

  const BranchResult winner = select_best(healthy);
  r.selected = winner.report_claim;
  r.validated = winner.validated;
  r.status = RunStatus::completed;
  if (winner.validated && ctx.options.hybrid_recheck) {
    Lane lane;
    auto re = e.validate(lane, e.validator(), Role::validator, "hybrid/recheck", *winner.report_claim, true);
    e.absorb(r, lane);
    if (lane.infra) {
      r = infra_report(std::move(r), lane.error);
    } else if (re) {
      r.validated = re->verdict == AttemptVerdict::confirmed;
    }
  }
  e.finish(r);
  return r;
}

RunReport run_engine(Architecture architecture, const EngineContext& ctx, RunBudget& budget) {
  switch (architecture) {
    case Architecture::sas: return run_sas(ctx, budget);
    case Architecture::mas_indep: return run_mas_indep(ctx, budget);
    case Architecture::mas_decent: return run_mas_decent(ctx, budget);
    case Architecture::mas_central: return run_mas_central(ctx, budget);
    case Architecture::mas_hybrid: return run_mas_hybrid(ctx, budget);
  }
  throw std::invalid_argument("unknown architecture");
}

// JSON ------------------------------------------------------------------------

void to_json(json& j, const ValidationAttempt& a) {
  j = {{"claim", a.claim},   {"verdict", a.verdict}, {"evidence", a.evidence}, {"started", a.started},
       {"ended", a.ended},   {"source", a.source},   {"recheck", a.recheck}};
}

void from_json(const json& j, ValidationAttempt& a) {
  a.claim = j.at("claim").get<Claim>();
  a.verdict = j.at("verdict").get<AttemptVerdict>();
  a.evidence = j.value("evidence", "");
  a.started = j.value("started", 0.0);
  a.ended = j.value("ended", 0.0);
  a.source = j.value("source", "");
  a.recheck = j.value("recheck", false);
}

void to_json(json& j, const BranchResult& b) {
  j = {{"source", b.source},       {"source_index", b.source_index}, {"validated", b.validated},
       {"attempts", b.attempts},   {"usage", b.usage},               {"infra_failed", b.infra_failed}};
  j["report_claim"] = b.report_claim ? json(*b.report_claim) : json(nullptr);
}

void from_json(const json& j, BranchResult& b) {
  b.source = j.at("source").get<std::string>();
  b.source_index = j.value("source_index", 0);
  b.validated = j.value("validated", false);
  b.attempts = j.value("attempts", std::vector<ValidationAttempt>{});
  b.usage = j.value("usage", TokenUsage{});
  b.infra_failed = j.value("infra_failed", false);
  if (j.contains("report_claim") && !j["report_claim"].is_null()) b.report_claim = j["report_claim"].get<Claim>();
}

void to_json(json& j, const EmittedClaim& c) { j = {{"source", c.source}, {"claim", c.claim}}; }

void from_json(const json& j, EmittedClaim& c) {
  c.source = j.at("source").get<std::string>();
  c.claim = j.at("claim").get<Claim>();
}

void to_json(json& j, const InvocationRecord& r) {
  j = {{"slot", r.slot},         {"role", to_string(r.role)}, {"status", to_string(r.status)},
       {"error", r.error},       {"started", r.started},      {"ended", r.ended},
       {"usage", r.usage},       {"messages", r.messages},    {"tool_commands", r.tool_commands}};
}

void from_json(const json& j, InvocationRecord& r) {
  r.slot = j.at("slot").get<std::string>();
  r.role = parse_role(j.at("role").get<std::string>());
  const auto st = j.value("status", "ok");
  r.status = st == "timeout" ? OutcomeStatus::timeout
             : st == "transport_error" ? OutcomeStatus::transport_error
                                       : OutcomeStatus::ok;
  r.error = j.value("error", "");
  r.started = j.value("started", 0.0);
  r.ended = j.value("ended", 0.0);
  r.usage = j.value("usage", TokenUsage{});
  r.messages = j.value("messages", std::vector<Message>{});
  r.tool_commands = j.value("tool_commands", std::vector<std::string>{});
}

void to_json(json& j, const RunReport& r) {
  j = {{"run_id", r.run_id},
       {"architecture", r.architecture},
       {"validated", r.validated},
       {"attempts", r.attempts},
       {"branch_results", r.branch_results},
       {"emitted", r.emitted},
       {"usage_total", r.usage_total},
       {"status", to_string(r.status)},
       {"error", r.error},
       {"wall_time", r.wall_time}};
  j["selected"] = r.selected ? json(*r.selected) : json(nullptr);
  j["ttfv"] = r.ttfv ? json(*r.ttfv) : json(nullptr);
  j["ttfv_attempt"] = r.ttfv_attempt ? json(*r.ttfv_attempt) : json(nullptr);
}

void from_json(const json& j, RunReport& r) {
  r = RunReport{};
  r.run_id = j.at("run_id").get<std::string>();
  r.architecture = j.at("architecture").get<Architecture>();
  r.validated = j.value("validated", false);
  r.attempts = j.value("attempts", std::vector<ValidationAttempt>{});
  r.branch_results = j.value("branch_results", std::vector<BranchResult>{});
  r.emitted = j.value("emitted", std::vector<EmittedClaim>{});
  r.usage_total = j.value("usage_total", TokenUsage{});
  r.status = parse_run_status(j.at("status").get<std::string>());
  r.error = j.value("error", "");
  r.wall_time = j.value("wall_time", 0.0);
  if (j.contains("selected") && !j["selected"].is_null()) r.selected = j["selected"].get<Claim>();
  if (j.contains("ttfv") && !j["ttfv"].is_null()) r.ttfv = j["ttfv"].get<double>();
  if (j.contains("ttfv_attempt") && !j["ttfv_attempt"].is_null()) r.ttfv_attempt = j["ttfv_attempt"].get<std::size_t>();
}

}  // namespace topobench
