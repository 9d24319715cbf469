#pragma once

// Metrics over adjudicated runs: grouped summaries, target-level bootstrap
// intervals, paired deltas, the cost-quality frontier and routing.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "topobench/registry.hpp"
#include "topobench/types.hpp"

namespace topobench {

struct RunRecord {
  std::string run_id;
  Architecture architecture = Architecture::sas;
  std::string model_family;
  std::string target_id;
  Domain domain = Domain::web;
  Mode mode = Mode::whitebox;
  Label label = Label::miss;
  std::optional<double> ttfv;
  double cost_in = 0.0;
  double cost_out = 0.0;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  double wall_time = 0.0;
  int attempts = 0;
  int validator_calls = 0;
  std::string feature_bin;
  bool stress = false;

  double cost() const { return cost_in + cost_out; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Coarse task-feature bin: one letter per feature, upper case when the value
/// is at or above `threshold`. Empty without features.
std::string feature_bin(const std::optional<TaskFeatures>& features, double threshold = 0.5);

/// One record per bundle under `root`; `suite` (optional) supplies feature bins.
std::vector<RunRecord> records_from_bundles(const std::filesystem::path& root, const SuiteManifest* suite = nullptr);

/// JSON array (.json) or CSV (.csv), chosen by extension.
void write_records(const std::filesystem::path& path, std::span<const RunRecord> records);
std::vector<RunRecord> read_records(const std::filesystem::path& path);

enum class Dimension { architecture, model_family, target_id, domain, mode, feature_bin };
std::string_view to_string(Dimension d);
/// Throws ConfigError for an unknown dimension name.
Dimension parse_dimension(std::string_view s);
std::string dimension_value(const RunRecord& r, Dimension d);

struct MetricsSummary {
  std::vector<std::pair<std::string, std::string>> key;  // (dimension, value)
  std::size_t n_runs = 0;
  std::array<std::size_t, 5> label_counts{};  // indexed by Label
  double detect_any_rate = 0.0;
  double validated_rate = 0.0;
  double fp_rate = 0.0;                          // fp / n
  std::optional<double> fp_rate_of_confirmed;    // fp / (tp + fp)
  std::optional<double> median_ttfv;             // tp runs only
  double cost_in_total = 0.0;
  double cost_out_total = 0.0;
  std::optional<double> cost_per_validated;      // absent when tp = 0
  double mean_input_tokens = 0.0;
  double mean_output_tokens = 0.0;
  double mean_cost_in = 0.0;
  double mean_cost_out = 0.0;
  double mean_attempts = 0.0;
  double mean_validator_calls = 0.0;
  double mean_wall_time = 0.0;

  std::size_t count(Label l) const { return label_counts[static_cast<std::size_t>(l)]; }
  double cost_total() const { return cost_in_total + cost_out_total; }
};

MetricsSummary summarize_group(std::span<const RunRecord> records);

/// One summary per nonempty group, ordered by key (enum order for enum
/// dimensions, natural order for ids). An empty dimension list yields one overall group.
std::vector<MetricsSummary> summarize(std::span<const RunRecord> records, std::span<const Dimension> group_by);

struct RecordFilter {
  std::optional<Architecture> architecture;
  std::optional<std::string> model_family;
  std::optional<Mode> mode;
  std::optional<Domain> domain;
  bool include_stress = true;

  bool matches(const RunRecord& r) const;
};

struct BootstrapCI {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int resamples = 0;
  std::uint64_t seed = 0;
  std::size_t n_targets = 0;
  std::string unit = "target-level validated rate";
};

inline constexpr int kDefaultResamples = 10000;

/// Percentile interval value at quantile q (linear interpolation at q*(n-1)) of sorted data.
double percentile_sorted(std::span<const double> sorted, double q);

/// Mean of per-target values resampled with replacement; shared by
/// bootstrap_ci and paired_delta. Throws std::invalid_argument when B < 1
/// or `values` is empty.
BootstrapCI bootstrap_mean(std::span<const double> values, int resamples, std::uint64_t seed);

/// Per-target validated rates (target id order) among records matching `filter`.
std::vector<std::pair<std::string, double>> target_rates(std::span<const RunRecord> records, const RecordFilter& filter);

BootstrapCI bootstrap_ci(std::span<const RunRecord> records, const RecordFilter& filter,
                         int resamples = kDefaultResamples, std::uint64_t seed = 0);

/// Bootstrap of per-target (a - b) validated-rate differences. Throws
/// ConfigError when the two architectures cover different targets.
BootstrapCI paired_delta(std::span<const RunRecord> records, Architecture a, Architecture b, Mode mode,
                         int resamples = kDefaultResamples, std::uint64_t seed = 0);

struct FrontierPoint {
  Architecture architecture = Architecture::sas;
  Mode mode = Mode::whitebox;
  std::optional<double> x;  // cost per validated finding
  double y = 0.0;           // validated rate
  BootstrapCI ci;
  bool on_frontier = false;

  std::string label() const;
};

/// One point per (architecture, mode) cell present in the records.
std::vector<FrontierPoint> frontier_points(std::span<const RunRecord> records, int resamples = kDefaultResamples,
                                           std::uint64_t seed = 0);

/// Non-dominated points with a defined x, sorted by x ascending.
std::vector<FrontierPoint> pareto_frontier(std::span<const FrontierPoint> points);

struct ArchEstimate {
  Architecture architecture = Architecture::sas;
  double s_hat = 0.0;
  double c_hat = 0.0;
};

struct RouteDecision {
  Architecture architecture = Architecture::sas;
  std::vector<double> utilities;  // aligned with the input estimates
};

/// argmax of S - lambda*C; ties go to lower C, then architecture name.
/// Throws ConfigError for lambda < 0 or no estimates.
RouteDecision route(std::span<const ArchEstimate> estimates, double lambda);

enum class CellFlag { ok, single_run, missing };
std::string_view to_string(CellFlag f);

struct RoutingEstimate {
  Architecture architecture = Architecture::sas;
  std::string context;  // e.g. "domain=web,mode=blackbox"
  double s_hat = 0.0;
  double c_hat = 0.0;
  double lambda = 0.0;
  double u_hat = 0.0;
  std::size_t n = 0;
  CellFlag flag = CellFlag::ok;
};

struct ContextKeys {
  bool domain = true;
  bool mode = true;
  bool feature_bin = false;
};

std::string context_of(const RunRecord& r, const ContextKeys& keys);

/// Every architecture crossed with every observed context; empty cells are
/// flagged missing with zero estimates.
std::vector<RoutingEstimate> fit_estimates(std::span<const RunRecord> records, const ContextKeys& keys,
                                           double lambda = 0.0);

/// Routes each context using its non-missing cells.
std::vector<std::pair<std::string, RouteDecision>> route_table(std::span<const RoutingEstimate> estimates,
                                                               double lambda);

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);
void to_json(nlohmann::json& j, const BootstrapCI& c);

/// Natural ordering: digit runs compare numerically ("W2" < "W10").
bool natural_less(std::string_view a, std::string_view b);

}  // namespace topobench
