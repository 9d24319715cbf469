#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace topobench {

inline constexpr double kMaxToolCapSeconds = 300.0;
inline constexpr std::size_t kToolOutputCap = 30000;

enum class ToolStatus { exited, timeout, sandbox_error };

struct ToolResult {
  ToolStatus status = ToolStatus::exited;
  int exit_status = 0;  // -1 when killed
  std::string stdout_text;
  std::string stderr_text;
  double duration = 0.0;
  bool truncated = false;
};

struct ToolOptions {
  /// Scratch directory the command runs in. Empty: a fresh temporary directory,
  /// removed afterwards.
  std::filesystem::path working_dir;
  /// Combined stdout+stderr cap; stdout is filled first.
  std::size_t output_cap = kToolOutputCap;
};

/// Runs `command` under /bin/sh in its own process group. The whole group is
/// killed when `cap_seconds` elapses. Throws ConfigError for a cap outside (0, 300]
/// and SandboxUnavailable when the scratch directory or the process cannot be created.
ToolResult execute_tool(std::string_view command, double cap_seconds, const ToolOptions& options = {});

}  // namespace topobench
