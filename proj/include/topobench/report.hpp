#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "topobench/analytics.hpp"

namespace topobench {

enum class ReportFormat { table, json, csv };
/// Throws ConfigError for anything but table, json or csv.
ReportFormat parse_report_format(std::string_view s);

/// Column names after the group-key columns.
const std::vector<std::string>& report_metric_columns();

/// Table, JSON array of objects keyed by column name, or CSV. Percentages carry
/// one decimal; undefined values render as "-" (table/csv) or null (json).
std::string emit_report(std::span<const MetricsSummary> summaries, ReportFormat format,
                        std::span<const std::string> key_columns = {});

struct FrontierFiles {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

/// Writes frontier.csv (every point) and frontier.svg (defined points with
/// CI whiskers, frontier members filled). Throws Error when no point has a
/// defined cost per validated finding.
FrontierFiles emit_frontier(std::span<const FrontierPoint> points, const std::filesystem::path& out_dir);

}  // namespace topobench
