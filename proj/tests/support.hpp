#pragma once

// Shared fixtures for the unit tests and the acceptance binary: scripted
// engine contexts, the topology scenario bank and independent oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "topobench/analytics.hpp"
#include "topobench/backends.hpp"
#include "topobench/prompts.hpp"
#include "topobench/topology.hpp"
#include "topobench/verifier.hpp"

namespace tbtest {

using namespace topobench;

inline Claim claim(const std::string& cwe, double conf, std::string poc = "poc") {
  return Claim{cwe, "finding " + cwe, conf, "evidence for " + cwe, std::move(poc)};
}

inline ScriptedBehavior finds(std::vector<Claim> claims) {
  ScriptedBehavior b;
  b.claims = std::move(claims);
  return b;
}

inline ScriptedBehavior judges(std::map<std::string, AttemptVerdict> verdicts) {
  ScriptedBehavior b;
  b.verdicts = std::move(verdicts);
  return b;
}

inline ScriptedBehavior broken() {
  ScriptedBehavior b;
  b.transport_error = true;
  return b;
}

inline constexpr auto C = AttemptVerdict::confirmed;
inline constexpr auto R = AttemptVerdict::rejected;
inline constexpr auto I = AttemptVerdict::inconclusive;

inline TargetContext web_target(Mode mode = Mode::whitebox) {
  TargetContext t;
  t.target_id = "W1";
  t.domain = Domain::web;
  t.mode = mode;
  t.endpoint = "http://127.0.0.1:8001/api/login";
  if (mode == Mode::whitebox) t.source_root = "benchmark/targets/W1/src";
  return t;
}

/// One scripted backend serves every role; validation uses `validator` unless null.
inline EngineContext scripted_context(std::shared_ptr<AgentBackend> agents, std::shared_ptr<AgentBackend> validator = {},
                                      Mode mode = Mode::whitebox) {
  EngineContext ctx;
  ctx.run_id = "scenario";
  ctx.target = web_target(mode);
  ctx.prompts = render_prompts(canonical_templates(), mode, ctx.target);
  ctx.agents.scanner = agents;
  ctx.agents.validator = validator ? validator : agents;
  ctx.options.parallel_branches = true;
  return ctx;
}

inline RunReport run(Architecture a, const EngineContext& ctx, double timeout_s = 30.0) {
  RunBudget budget(timeout_s);
  return run_engine(a, ctx, budget);
}

/// Report with every timestamp cleared, for determinism comparisons.
inline RunReport without_times(RunReport r) {
  r.wall_time = 0;
  r.ttfv.reset();
  r.ttfv_attempt.reset();  // earliest confirmation by clock; scheduling dependent
  auto clear = [](std::vector<ValidationAttempt>& as) {
    for (auto& a : as) a.started = a.ended = 0;
  };
  clear(r.attempts);
  for (auto& b : r.branch_results) clear(b.attempts);
  for (auto& inv : r.invocations) inv.started = inv.ended = 0;
  return r;
}

// ---------------------------------------------------------------------------
// Scenario bank

struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Scenario {
  std::string name;
  std::function<void(Check&)> body;
};

inline std::string selected_cwe(const RunReport& r) { return r.selected ? r.selected->cwe : "none"; }

inline bool attempt_bounds_hold(const RunReport& r, std::size_t emitted) {
  switch (r.architecture) {
    case Architecture::sas: return r.attempts.size() <= emitted;
    case Architecture::mas_indep: return r.attempts.size() <= emitted;
    case Architecture::mas_decent: return r.attempts.size() <= 2;
    case Architecture::mas_central: return r.attempts.size() <= 2;
    case Architecture::mas_hybrid: return r.attempts.size() <= 3;
  }
  return false;
}

/// Invariants every finished report must satisfy.
inline void common_invariants(Check& c, const RunReport& r) {
  c.expect(attempt_bounds_hold(r, r.emitted.size()), "attempt-count bound");
  if (r.status == RunStatus::failed_placeholder) c.expect(!r.validated, "placeholder is unvalidated");
  for (const auto& a : r.attempts) {
    c.expect(a.ended >= a.started, "attempt ends after it starts");
    if (a.verdict == AttemptVerdict::confirmed) c.expect(!a.evidence.empty(), "confirmation carries evidence");
  }
  if (r.validated) {
    c.expect(r.ttfv.has_value() && r.ttfv_attempt.has_value(), "validated run has a TTFV source");
    if (r.ttfv) c.expect(*r.ttfv <= r.wall_time, "ttfv within wall time");
  }
  for (const auto& b : r.branch_results) {
    if (b.validated && !b.attempts.empty()) {
      c.expect(b.attempts.back().verdict == AttemptVerdict::confirmed, "validated branch ends confirmed");
      c.expect(b.report_claim && b.attempts.back().claim.cwe == b.report_claim->cwe, "branch claim matches attempt");
    }
  }
  TokenUsage sum;
  for (const auto& inv : r.invocations) sum += inv.usage;
  c.expect(sum == r.usage_total, "usage_total sums invocations");
}

std::vector<Scenario> topology_scenarios();

// ---------------------------------------------------------------------------
// Independent oracles

/// One claim of an enumerated small report.
struct OracleClaim {
  bool correct = false;
  bool attempted = false;
  bool confirmed = false;
};

/// Label table written from the label definitions alone.
inline Label oracle_label(bool crashed, const std::vector<OracleClaim>& claims) {
  if (crashed) return Label::infra_error;
  bool correct_confirmed = false, wrong_confirmed = false, correct_claimed = false;
  for (const auto& c : claims) {
    correct_confirmed |= c.correct && c.confirmed;
    wrong_confirmed |= !c.correct && c.confirmed;
    correct_claimed |= c.correct;
  }
  if (correct_confirmed) return Label::tp;
  if (wrong_confirmed) return Label::fp;
  if (correct_claimed) return Label::partial;
  return Label::miss;
}

/// Builds an SAS-shaped report: claims validated in order until the first confirmation.
inline RunReport oracle_report(bool crashed, const std::vector<OracleClaim>& claims, const std::string& truth) {
  RunReport r;
  r.run_id = "oracle";
  int wrong = 0;
  std::vector<Claim> emitted;
  for (const auto& oc : claims) {
    emitted.push_back(claim(oc.correct ? truth : fmt::format("CWE-{}", 700 + wrong++), 0.5));
    r.emitted.push_back({"sas/scanner", emitted.back()});
  }
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (!claims[i].attempted) continue;
    ValidationAttempt a;
    a.claim = emitted[i];
    a.verdict = claims[i].confirmed ? AttemptVerdict::confirmed : AttemptVerdict::rejected;
    a.evidence = "observed";
    a.started = static_cast<double>(i);
    a.ended = static_cast<double>(i) + 0.5;
    a.source = "sas/validator";
    r.attempts.push_back(a);
    if (claims[i].confirmed && !r.validated) {
      r.validated = true;
      r.selected = emitted[i];
    }
  }
  r.status = crashed ? RunStatus::infra_error : r.validated ? RunStatus::completed : RunStatus::failed_placeholder;
  if (crashed) {
    r.validated = false;
    r.selected.reset();
  }
  return r;
}

/// Every 3-claim report over {correct, confirmed} per claim and run crashed.
/// Confirmed claims are attempted; unconfirmed ones alternate attempted/not.
inline std::vector<std::pair<bool, std::vector<OracleClaim>>> enumerate_oracle_cases() {
  std::vector<std::pair<bool, std::vector<OracleClaim>>> out;
  for (int crashed = 0; crashed < 2; ++crashed) {
    for (int mask = 0; mask < 64; ++mask) {
      std::vector<OracleClaim> cs(3);
      for (int k = 0; k < 3; ++k) {
        cs[k].correct = (mask >> (2 * k)) & 1;
        cs[k].confirmed = (mask >> (2 * k + 1)) & 1;
        cs[k].attempted = cs[k].confirmed || k % 2 == 0;
      }
      out.emplace_back(crashed != 0, cs);
    }
  }
  return out;
}

/// Bootstrap written independently: mt19937_64 with uniform_int_distribution
/// and nearest-rank percentiles.
inline std::pair<double, double> oracle_bootstrap(const std::vector<double>& values, int B, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    double s = 0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(gen)];
    means.push_back(s / static_cast<double>(values.size()));
  }
  std::sort(means.begin(), means.end());
  auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(B))) - 1;
    return means[std::min(k, means.size() - 1)];
  };
  return {rank(0.025), rank(0.975)};
}

/// O(n^2) dominance filter over (x, y) pairs; returns surviving indices.
inline std::vector<std::size_t> oracle_frontier(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      const auto [xi, yi] = pts[i];
      const auto [xj, yj] = pts[j];
      dominated = (xj <= xi && yj > yi) || (xj < xi && yj == yi);
    }
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

/// Synthetic records: `targets` targets, one record per (model, target) for one architecture/mode.
inline std::vector<RunRecord> bernoulli_records(int targets, int models, double p, std::uint64_t seed,
                                                Architecture a = Architecture::sas, Mode m = Mode::whitebox) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution hit(p);
  std::vector<RunRecord> out;
  for (int t = 0; t < targets; ++t) {
    for (int k = 0; k < models; ++k) {
      RunRecord r;
      r.run_id = fmt::format("r{}-{}", t, k);
      r.architecture = a;
      r.mode = m;
      r.model_family = fmt::format("m{}", k);
      r.target_id = fmt::format("T{}", t + 1);
      r.label = hit(gen) ? Label::tp : Label::miss;
      r.cost_in = 0.01;
      r.cost_out = 0.02;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace tbtest
