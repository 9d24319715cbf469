#pragma once

// Artifact bundle layout:
//   run.json         run spec, ground truth, report summary, cost, timing
//   findings.jsonl   one emitted claim per line
//   trace.jsonl      one validation attempt per line
//   activity.jsonl   timestamped run events
//   messages.jsonl   one agent invocation (transcript) per line
//   logs/run.log     free-text log
//   evidence/        optional evidence excerpts for confirmed attempts
//   verdict.json     written last, exactly once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/cost.hpp"
#include "topobench/run_spec.hpp"
#include "topobench/topology.hpp"
#include "topobench/verifier.hpp"

namespace topobench {

inline constexpr const char* kRunFile = "run.json";
inline constexpr const char* kFindingsFile = "findings.jsonl";
inline constexpr const char* kVerdictFile = "verdict.json";
inline constexpr const char* kTraceFile = "trace.jsonl";
inline constexpr const char* kActivityFile = "activity.jsonl";
inline constexpr const char* kMessagesFile = "messages.jsonl";
inline constexpr const char* kLogFile = "logs/run.log";

/// The files every bundle must contain, in write order (verdict last).
const std::vector<std::string>& canonical_bundle_files();

struct ActivityEvent {
  double t = 0.0;  // seconds since run start
  std::string event;
  std::string detail;

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

struct BundleData {
  RunSpec spec;
  GroundTruth truth;
  RunReport report;
  Verdict verdict;
  Cost cost;
  std::string wall_anchor;           // UTC time at run start
  std::string termination = "normal";  // normal | graceful_stop | hard_kill
  std::vector<ActivityEvent> activity;
  std::string log;
  std::map<std::string, std::string> evidence;  // file name -> content

  friend bool operator==(const BundleData&, const BundleData&) = default;
};

/// Writes run.json with status "running"; called when a run starts.
void write_run_header(const std::filesystem::path& dir, const RunSpec& spec, const GroundTruth& truth,
                      const std::string& wall_anchor);

/// Persists a finished run. Every file is written atomically; verdict.json
/// goes last. Throws Error if the bundle already has a verdict.
void write_bundle(const std::filesystem::path& dir, const BundleData& data);

/// Throws IncompleteBundle naming the first missing canonical file.
BundleData load_bundle(const std::filesystem::path& dir);

/// Bundle directories (containing run.json) directly under `root`, sorted by name.
std::vector<std::filesystem::path> list_bundles(const std::filesystem::path& root);

// Low-level readers shared with the auditor.
nlohmann::json read_json_file(const std::filesystem::path& path);
std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

void to_json(nlohmann::json& j, const ActivityEvent& e);
void from_json(const nlohmann::json& j, ActivityEvent& e);

}  // namespace topobench
