#pragma once

// Run matrix construction, target reset, and bounded-parallel campaign
// execution that persists one artifact bundle per run.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/backends.hpp"
#include "topobench/bundle.hpp"
#include "topobench/cost.hpp"
#include "topobench/prompts.hpp"
#include "topobench/registry.hpp"
#include "topobench/run_spec.hpp"
#include "topobench/topology.hpp"

namespace topobench {

struct MatrixConfig {
  std::string campaign_id = "campaign";
  std::vector<Architecture> architectures{kAllArchitectures.begin(), kAllArchitectures.end()};
  std::vector<std::string> model_families;
  const SuiteManifest* suite = nullptr;
  std::vector<Mode> modes{kAllModes.begin(), kAllModes.end()};
  bool include_stress = false;
  RunBudgetSpec budget;
  std::uint64_t seed = 0;
};

/// Stable digest-based identifier; also the bundle directory name.
std::string make_run_id(const std::string& campaign_id, Architecture a, const std::string& family,
                        const std::string& target_id, Mode m, std::uint64_t seed);

/// Cross product in (architecture, model, target, mode) order; stress rows
/// follow the core rows. Throws ConfigError on an empty dimension.
std::vector<RunSpec> build_matrix(const MatrixConfig& config);

struct ResetOptions {
  int health_retries = 10;
  std::chrono::milliseconds retry_interval{200};
  std::chrono::milliseconds probe_timeout{2000};
};

struct HealthStatus {
  bool ok = false;
  int probes = 0;
  double elapsed = 0.0;
  std::string message;
};

/// Runs the reset hook, then probes health until it succeeds or retries run
/// out. Hooks: http(s) URLs (POST reset, GET health), tcp endpoints ("RESET"
/// expecting "OK"; health is a successful connect) or shell commands (exit 0).
/// Without a health hook the target's endpoint is probed by connecting.
HealthStatus reset_target(const TargetSpec& target, const ResetOptions& options = {});

/// Backends for one model family.
struct FamilyBackends {
  std::shared_ptr<AgentBackend> model;
  /// Validator override; unset uses the registry default, then the model itself.
  std::shared_ptr<AgentBackend> validator;
};

class BackendRegistry {
 public:
  void add_family(const std::string& family, FamilyBackends backends);
  void set_default_validator(std::shared_ptr<AgentBackend> validator) { default_validator_ = std::move(validator); }
  bool has(const std::string& family) const { return families_.count(family) != 0; }
  /// Throws ConfigError for an unregistered family.
  EngineAgents agents_for(const std::string& family) const;
  std::vector<std::string> families() const;

 private:
  std::map<std::string, FamilyBackends> families_;
  std::shared_ptr<AgentBackend> default_validator_;
};

struct CampaignOptions {
  std::filesystem::path out_dir = "runs";
  int parallelism = 2;
  PriceTable prices;
  PromptTemplates templates = canonical_templates();
  EngineOptions engine;
  double grace_s = 30.0;
  ResetOptions reset;
  /// Existing finalized bundles are kept instead of re-executed.
  bool resume = true;
  std::function<void(const RunSpec&, const Verdict&)> on_run_finished;
};

struct CampaignResult {
  std::vector<std::filesystem::path> bundles;  // in spec order
  int peak_concurrency = 0;
  std::size_t infra_errors = 0;
  bool all_persisted = true;
};

/// Executes every spec with at most `parallelism` runs in flight. A run that
/// fails in any way still yields a bundle labelled infra_error.
CampaignResult execute_campaign(const std::vector<RunSpec>& specs, const SuiteManifest& suite,
                                const BackendRegistry& backends, const CampaignOptions& options);

/// Executes a single run end to end and returns its bundle directory.
std::filesystem::path execute_run(const RunSpec& spec, const TargetSpec& target, const BackendRegistry& backends,
                                  const CampaignOptions& options);

/// Re-executes every infra_error bundle under options.out_dir.
CampaignResult rerun_infra_errors(const SuiteManifest& suite, const BackendRegistry& backends,
                                  const CampaignOptions& options);

/// Campaign configuration file. Relative paths resolve against the file's directory.
struct CampaignConfig {
  std::string campaign_id = "campaign";
  std::filesystem::path suite_path;
  std::vector<Architecture> architectures{kAllArchitectures.begin(), kAllArchitectures.end()};
  std::vector<Mode> modes{kAllModes.begin(), kAllModes.end()};
  std::vector<std::string> family_names;
  std::map<std::string, nlohmann::json> family_backends;  // backend description per family
  std::optional<nlohmann::json> validator;                // default validator description
  bool include_stress = false;
  bool mock_targets = false;  // run against in-process mocks instead of the suite
  RunBudgetSpec budget;
  std::uint64_t seed = 0;
  int parallelism = 2;
  std::optional<std::filesystem::path> prices_path;
  std::optional<std::filesystem::path> templates_path;
  bool hybrid_recheck = true;
  int max_tool_turns = 8;
  double grace_s = 30.0;
};

CampaignConfig load_campaign_config(const std::filesystem::path& path);

/// Builds backends from the config's descriptions. `simulated` feeds
/// stochastic backends. Throws ConfigError (e.g. missing credentials).
BackendRegistry build_registry(const CampaignConfig& config, const std::vector<SimulatedTarget>& simulated = {});

}  // namespace topobench
