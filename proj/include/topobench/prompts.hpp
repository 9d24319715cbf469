#pragma once

// Canonical prompt scaffold shared by every topology, plus the
// deterministic blackbox rewrite that strips source-access claims.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topobench/registry.hpp"
#include "topobench/types.hpp"

namespace topobench {

struct PromptTemplates {
  std::string main_system;
  std::string sandbox_system;
  std::string validator_system;
  std::string user;
};

/// The four ingested templates, byte-for-byte.
const PromptTemplates& canonical_templates();

/// JSON object with keys main_system, sandbox_system, validator_system, user.
PromptTemplates load_templates(const std::filesystem::path& path);

struct Substitution {
  std::string_view prompt;  // which template the pair was written against
  std::string_view from;
  std::string_view to;
};

const std::vector<Substitution>& blackbox_substitutions();

/// Left-hand sides of the substitution table; none may survive blackbox rendering.
std::vector<std::string_view> forbidden_source_phrases();

/// Applies every pair once, longest pattern first, at every occurrence.
std::string apply_blackbox_substitutions(std::string text);

struct PromptBundle {
  std::string main_system;
  std::string sandbox_system;
  std::string validator_system;
  std::string user;
  Mode mode = Mode::whitebox;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Whitebox: templates verbatim plus interpolation. Blackbox: substitutions, then interpolation.
/// Throws ConfigError when a `{placeholder}` is left unresolved.
PromptBundle render_prompts(const PromptTemplates& templates, Mode mode, const TargetContext& ctx);

/// Forbidden phrases found anywhere in the bundle (empty for a clean blackbox bundle).
std::vector<std::string> find_forbidden_phrases(const PromptBundle& bundle);

}  // namespace topobench
