#pragma once

// Benchmark target suite: manifest loading, contract validation and
// per-mode target context resolution.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/types.hpp"

namespace topobench {

/// Author-supplied task descriptors. Opaque reals; no units are implied.
struct TaskFeatures {
  double surface_entropy = 0.0;
  double exploit_depth = 0.0;
  double tool_intensity = 0.0;
  double branching_volatility = 0.0;
  double observability_penalty = 0.0;

  friend bool operator==(const TaskFeatures&, const TaskFeatures&) = default;
};

struct TargetSpec {
  std::string id;
  Domain domain = Domain::web;
  std::string primary_cwe;
  std::string blackbox_endpoint;
  std::optional<std::string> whitebox_source_root;
  std::string language;
  std::string description;
  std::uint64_t loc = 0;
  bool stress = false;
  std::optional<TaskFeatures> features;
  std::optional<std::string> reset_hook;
  std::optional<std::string> health_hook;

  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

struct SuiteManifest {
  int schema_version = 1;
  std::vector<TargetSpec> core_targets;
  std::vector<TargetSpec> stress_targets;

  /// Core targets followed by stress targets.
  std::vector<const TargetSpec*> all_targets() const;
  const TargetSpec* find(std::string_view id) const;

  friend bool operator==(const SuiteManifest&, const SuiteManifest&) = default;
};

inline constexpr int kSupportedSchemaVersion = 1;
inline constexpr std::size_t kRequiredCoreTargets = 20;

SuiteManifest load_suite(std::string_view document);
SuiteManifest load_suite_file(const std::filesystem::path& path);
nlohmann::json serialize_suite(const SuiteManifest& suite);

enum class ViolationKind {
  core_target_count,
  duplicate_primary_cwe,
  duplicate_target_id,
  invalid_cwe,
  invalid_endpoint,
  endpoint_scheme_mismatch,
  missing_source_root,
  stress_flag_mismatch,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind{};
  std::string target_id;
  std::string cwe;
  std::string expected;
  std::string got;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

void to_json(nlohmann::json& j, const Violation& v);

struct ValidationOptions {
  bool whitebox_enabled = true;
};

/// Pure and order-stable: suite-level checks first, then per-target checks in manifest order.
std::vector<Violation> validate_suite(const SuiteManifest& suite, const ValidationOptions& options = {});

struct DomainSplit {
  std::size_t web = 0;
  std::size_t binary = 0;
};

DomainSplit domain_split(const std::vector<TargetSpec>& targets);

/// What an agent is allowed to see about a target in one access mode.
struct TargetContext {
  std::string target_id;
  Domain domain = Domain::web;
  Mode mode = Mode::whitebox;
  std::string endpoint;
  std::optional<std::string> source_root;  // whitebox only
};

TargetContext resolve_mode_context(const TargetSpec& target, Mode mode);

}  // namespace topobench
