#pragma once

// Non-LLM adjudication of finished runs and bundle consistency audits.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/error.hpp"
#include "topobench/topology.hpp"
#include "topobench/types.hpp"

namespace topobench {

struct GroundTruth {
  std::string target_id;
  std::string primary_cwe;
  Domain domain = Domain::web;
  Mode mode = Mode::whitebox;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct Verdict {
  Label label = Label::miss;
  std::optional<std::string> matched_cwe;
  std::string rationale;
  std::string adjudicated_at;  // ISO-8601 UTC

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

class MalformedReport : public Error {
 public:
  using Error::Error;
};

/// Labels a run. Rules apply in order: infra_error, tp, fp, partial, miss.
/// `claims` is every claim emitted during the run. Throws MalformedReport for
/// self-contradictory reports.
Verdict adjudicate(const RunReport& report, std::span<const Claim> claims, const GroundTruth& truth,
                   std::string adjudicated_at = {});

/// Convenience overload taking the report's own emitted claims.
Verdict adjudicate(const RunReport& report, const GroundTruth& truth, std::string adjudicated_at = {});

/// Current UTC time as an ISO-8601 string with millisecond precision.
std::string utc_timestamp();

enum class FlagKind {
  missing_file,
  unparsable_file,
  label_mismatch,
  matched_cwe_mismatch,
  confirmed_without_evidence,
  tp_without_confirmation,
  report_inconsistent,
};
std::string_view to_string(FlagKind k);

struct ConsistencyFlag {
  FlagKind kind{};
  std::string detail;

  friend bool operator==(const ConsistencyFlag&, const ConsistencyFlag&) = default;
};

struct ConsistencyReport {
  std::filesystem::path bundle;
  std::vector<ConsistencyFlag> flags;

  bool clean() const { return flags.empty(); }
};

/// Re-derives the verdict from the bundle's findings and validation records
/// and compares it with verdict.json. Never throws for bundle content problems.
ConsistencyReport audit_bundle(const std::filesystem::path& bundle_dir);

void to_json(nlohmann::json& j, const GroundTruth& g);
void from_json(const nlohmann::json& j, GroundTruth& g);
void to_json(nlohmann::json& j, const Verdict& v);
void from_json(const nlohmann::json& j, Verdict& v);
void to_json(nlohmann::json& j, const ConsistencyReport& r);

}  // namespace topobench
