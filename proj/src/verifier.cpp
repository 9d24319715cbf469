#include "topobench/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "topobench/bundle.hpp"
#include "topobench/cwe.hpp"

namespace topobench {

using nlohmann::json;

namespace {

std::string canon(const std::string& cwe) { return try_normalize_cwe(cwe).value_or(cwe); }

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

Verdict adjudicate(const RunReport& report, std::span<const Claim> claims, const GroundTruth& truth,
                   std::string adjudicated_at) {
  if (report.validated && !report.selected) throw MalformedReport("validated report without a selected claim");
  if (report.status == RunStatus::failed_placeholder && report.validated) {
    throw MalformedReport("failed placeholder marked validated");
  }
  const auto confirmations = effective_confirmations(report.attempts);
  if (report.validated && report.status != RunStatus::infra_error) {
    const bool backed = std::any_of(confirmations.begin(), confirmations.end(), [&](std::size_t i) {
      return report.attempts[i].claim.cwe == report.selected->cwe;
    });
    if (!backed) throw MalformedReport("validated report without a confirming attempt for " + report.selected->cwe);
  }

  const std::string want = canon(truth.primary_cwe);
  Verdict v;
  v.adjudicated_at = adjudicated_at.empty() ? utc_timestamp() : std::move(adjudicated_at);

  if (report.status == RunStatus::infra_error) {
    v.label = Label::infra_error;
    v.rationale = report.error.empty() ? "run ended with an infrastructure error" : report.error;
    return v;
  }
  for (auto i : confirmations) {
    if (canon(report.attempts[i].claim.cwe) == want) {
      v.label = Label::tp;
      v.matched_cwe = want;
      v.rationale = fmt::format("validator confirmed {} ({})", want, report.attempts[i].source);
      return v;
    }
  }
  if (report.validated && canon(report.selected->cwe) != want) {
    v.label = Label::fp;
    v.rationale = fmt::format("confirmed {} but ground truth is {}", report.selected->cwe, want);
    return v;
  }
  auto matches = [&](const Claim& c) { return canon(c.cwe) == want; };
  bool claimed = std::any_of(claims.begin(), claims.end(), matches) ||
                 (report.selected && matches(*report.selected)) ||
                 std::any_of(report.attempts.begin(), report.attempts.end(),
                             [&](const ValidationAttempt& a) { return matches(a.claim); });
  if (claimed) {
    v.label = Label::partial;
    v.matched_cwe = want;
    v.rationale = fmt::format("{} claimed without validator confirmation", want);
    return v;
  }
  v.label = Label::miss;
  v.rationale = fmt::format("{} never claimed", want);
  return v;
}

Verdict adjudicate(const RunReport& report, const GroundTruth& truth, std::string adjudicated_at) {
  std::vector<Claim> claims;
  claims.reserve(report.emitted.size());
  for (const auto& e : report.emitted) claims.push_back(e.claim);
  return adjudicate(report, claims, truth, std::move(adjudicated_at));
}

std::string_view to_string(FlagKind k) {
  switch (k) {
    case FlagKind::missing_file: return "missing_file";
    case FlagKind::unparsable_file: return "unparsable_file";
    case FlagKind::label_mismatch: return "label_mismatch";
    case FlagKind::matched_cwe_mismatch: return "matched_cwe_mismatch";
    case FlagKind::confirmed_without_evidence: return "confirmed_without_evidence";
    case FlagKind::tp_without_confirmation: return "tp_without_confirmation";
    case FlagKind::report_inconsistent: return "report_inconsistent";
  }
  return "unknown";
}

ConsistencyReport audit_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  ConsistencyReport out;
  out.bundle = dir;
  auto flag = [&](FlagKind k, std::string d) { out.flags.push_back({k, std::move(d)}); };

  for (const auto& name : canonical_bundle_files()) {
    if (!fs::is_regular_file(dir / name)) flag(FlagKind::missing_file, name);
  }

  std::optional<json> run, verdict_doc;
  std::optional<std::vector<json>> trace, findings;
  auto load = [&](const char* name, auto reader, auto& slot) {
    if (!fs::is_regular_file(dir / name)) return;
    try {
      slot = reader(dir / name);
    } catch (const std::exception& e) {
      flag(FlagKind::unparsable_file, std::string(name) + ": " + e.what());
    }
  };
  load(kRunFile, read_json_file, run);
  load(kVerdictFile, read_json_file, verdict_doc);
  load(kTraceFile, read_jsonl_file, trace);
  load(kFindingsFile, read_jsonl_file, findings);
  if (!run || !verdict_doc || !trace || !findings) return out;

  RunReport report;
  GroundTruth truth;
  Verdict stored;
  std::vector<Claim> claims;
  try {
    json rj = run->at("report");
    rj["attempts"] = json::array();
    for (const auto& line : *trace) rj["attempts"].push_back(line.at("attempt"));
    report = rj.get<RunReport>();
    truth = run->at("ground_truth").get<GroundTruth>();
    stored = verdict_doc->get<Verdict>();
    for (const auto& line : *findings) claims.push_back(line.at("claim").get<Claim>());
  } catch (const std::exception& e) {
    flag(FlagKind::unparsable_file, std::string("bundle records: ") + e.what());
    return out;
  }

  for (std::size_t i = 0; i < report.attempts.size(); ++i) {
    const auto& a = report.attempts[i];
    if (a.verdict == AttemptVerdict::confirmed && a.evidence.empty()) {
      flag(FlagKind::confirmed_without_evidence, fmt::format("attempt {} ({})", i, a.claim.cwe));
    }
  }
  if (stored.label == Label::tp) {
    const auto conf = effective_confirmations(report.attempts);
    const bool ok = std::any_of(conf.begin(), conf.end(), [&](std::size_t i) {
      return canon(report.attempts[i].claim.cwe) == canon(truth.primary_cwe);
    });
    if (!ok) flag(FlagKind::tp_without_confirmation, "no confirming attempt for " + truth.primary_cwe);
  }

  Verdict derived;
  try {
    derived = adjudicate(report, claims, truth, stored.adjudicated_at);
  } catch (const MalformedReport& e) {
    flag(FlagKind::report_inconsistent, e.what());
    return out;
  }
  if (derived.label != stored.label) {
    flag(FlagKind::label_mismatch, fmt::format("stored {} derived {}", to_string(stored.label), to_string(derived.label)));
  }
  if (derived.matched_cwe != stored.matched_cwe) {
    flag(FlagKind::matched_cwe_mismatch, fmt::format("stored {} derived {}", stored.matched_cwe.value_or("none"),
                                                     derived.matched_cwe.value_or("none")));
  }
  return out;
}

void to_json(json& j, const GroundTruth& g) {
  j = {{"target_id", g.target_id}, {"primary_cwe", g.primary_cwe}, {"domain", g.domain}, {"mode", g.mode}};
}

void from_json(const json& j, GroundTruth& g) {
  g.target_id = j.at("target_id").get<std::string>();
  g.primary_cwe = normalize_cwe(j.at("primary_cwe").get<std::string>());
  g.domain = j.at("domain").get<Domain>();
  g.mode = j.at("mode").get<Mode>();
}

void to_json(json& j, const Verdict& v) {
  j = {{"label", v.label}, {"rationale", v.rationale}, {"adjudicated_at", v.adjudicated_at}};
  j["matched_cwe"] = v.matched_cwe ? json(*v.matched_cwe) : json(nullptr);
}

void from_json(const json& j, Verdict& v) {
  v.label = j.at("label").get<Label>();
  v.rationale = j.value("rationale", "");
  v.adjudicated_at = j.value("adjudicated_at", "");
  v.matched_cwe.reset();
  if (j.contains("matched_cwe") && !j["matched_cwe"].is_null()) v.matched_cwe = j["matched_cwe"].get<std::string>();
}

void to_json(json& j, const ConsistencyReport& r) {
  j = {{"bundle", r.bundle.string()}, {"clean", r.clean()}, {"flags", json::array()}};
  for (const auto& f : r.flags) j["flags"].push_back({{"kind", to_string(f.kind)}, {"detail", f.detail}});
}

}  // namespace topobench
