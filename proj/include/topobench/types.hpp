#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace topobench {

enum class Architecture { sas, mas_indep, mas_decent, mas_central, mas_hybrid };

inline constexpr std::array<Architecture, 5> kAllArchitectures = {
    Architecture::sas, Architecture::mas_indep, Architecture::mas_decent,
    Architecture::mas_central, Architecture::mas_hybrid};

enum class Mode { whitebox, blackbox };
inline constexpr std::array<Mode, 2> kAllModes = {Mode::whitebox, Mode::blackbox};

enum class Domain { web, binary };

enum class Role { scanner, sandbox, validator, planner };

/// Ground-truth adjudication label.
enum class Label { tp, partial, fp, miss, infra_error };
inline constexpr std::array<Label, 5> kAllLabels = {Label::tp, Label::partial, Label::fp,
                                                    Label::miss, Label::infra_error};

/// Outcome of one validator trial.
enum class AttemptVerdict { confirmed, rejected, inconclusive };

std::string_view to_string(Architecture a);
std::string_view to_string(Mode m);
std::string_view to_string(Domain d);
std::string_view to_string(Role r);
std::string_view to_string(Label l);
std::string_view to_string(AttemptVerdict v);

// Parsers accept the canonical spelling and are case-insensitive; they throw ParseError.
Architecture parse_architecture(std::string_view s);
Mode parse_mode(std::string_view s);
Domain parse_domain(std::string_view s);
Role parse_role(std::string_view s);
Label parse_label(std::string_view s);
AttemptVerdict parse_attempt_verdict(std::string_view s);

struct TokenUsage {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

/// A vulnerability hypothesis emitted by an agent. `cwe` is always canonical.
struct Claim {
  std::string cwe;
  std::string title;
  double confidence = 0.0;
  std::string evidence;
  std::optional<std::string> poc;

  friend bool operator==(const Claim&, const Claim&) = default;
};

void to_json(nlohmann::json& j, Architecture a);
void from_json(const nlohmann::json& j, Architecture& a);
void to_json(nlohmann::json& j, Mode m);
void from_json(const nlohmann::json& j, Mode& m);
void to_json(nlohmann::json& j, Domain d);
void from_json(const nlohmann::json& j, Domain& d);
void to_json(nlohmann::json& j, Label l);
void from_json(const nlohmann::json& j, Label& l);
void to_json(nlohmann::json& j, AttemptVerdict v);
void from_json(const nlohmann::json& j, AttemptVerdict& v);
void to_json(nlohmann::json& j, const TokenUsage& u);
void from_json(const nlohmann::json& j, TokenUsage& u);
void to_json(nlohmann::json& j, const Claim& c);
void from_json(const nlohmann::json& j, Claim& c);

}  // namespace topobench
