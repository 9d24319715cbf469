#include "topobench/types.hpp"

#include <algorithm>
#include <cctype>

#include "topobench/cwe.hpp"
#include "topobench/error.hpp"

namespace topobench {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view what) {
  for (const auto& [name, value] : table) {
    if (iequals(name, s)) return value;
  }
  throw ParseError(std::string(what), "unknown value '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Architecture>, 10> kArchNames{{
    {"SAS", Architecture::sas},
    {"MAS-Indep", Architecture::mas_indep},
    {"MAS-Decent", Architecture::mas_decent},
    {"MAS-Central", Architecture::mas_central},
    {"MAS-Hybrid", Architecture::mas_hybrid},
    {"sas", Architecture::sas},
    {"mas_indep", Architecture::mas_indep},
    {"mas_decent", Architecture::mas_decent},
    {"mas_central", Architecture::mas_central},
    {"mas_hybrid", Architecture::mas_hybrid},
}};

constexpr std::array<std::pair<std::string_view, Mode>, 2> kModeNames{{
    {"whitebox", Mode::whitebox},
    {"blackbox", Mode::blackbox},
}};

constexpr std::array<std::pair<std::string_view, Domain>, 2> kDomainNames{{
    {"web", Domain::web},
    {"binary", Domain::binary},
}};

constexpr std::array<std::pair<std::string_view, Role>, 4> kRoleNames{{
    {"scanner", Role::scanner},
    {"sandbox", Role::sandbox},
    {"validator", Role::validator},
    {"planner", Role::planner},
}};

constexpr std::array<std::pair<std::string_view, Label>, 5> kLabelNames{{
    {"tp", Label::tp},
    {"partial", Label::partial},
    {"fp", Label::fp},
    {"miss", Label::miss},
    {"infra_error", Label::infra_error},
}};

constexpr std::array<std::pair<std::string_view, AttemptVerdict>, 3> kVerdictNames{{
    {"confirmed", AttemptVerdict::confirmed},
    {"rejected", AttemptVerdict::rejected},
    {"inconclusive", AttemptVerdict::inconclusive},
}};

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

}  // namespace

std::string_view to_string(Architecture a) { return name_of(a, kArchNames); }
std::string_view to_string(Mode m) { return name_of(m, kModeNames); }
std::string_view to_string(Domain d) { return name_of(d, kDomainNames); }
std::string_view to_string(Role r) { return name_of(r, kRoleNames); }
std::string_view to_string(Label l) { return name_of(l, kLabelNames); }
std::string_view to_string(AttemptVerdict v) { return name_of(v, kVerdictNames); }

Architecture parse_architecture(std::string_view s) { return parse_enum(s, kArchNames, "architecture"); }
Mode parse_mode(std::string_view s) { return parse_enum(s, kModeNames, "mode"); }
Domain parse_domain(std::string_view s) { return parse_enum(s, kDomainNames, "domain"); }
Role parse_role(std::string_view s) { return parse_enum(s, kRoleNames, "role"); }
Label parse_label(std::string_view s) { return parse_enum(s, kLabelNames, "label"); }
AttemptVerdict parse_attempt_verdict(std::string_view s) {
  return parse_enum(s, kVerdictNames, "verdict");
}

void to_json(nlohmann::json& j, Architecture a) { j = std::string(to_string(a)); }
void from_json(const nlohmann::json& j, Architecture& a) { a = parse_architecture(j.get<std::string>()); }
void to_json(nlohmann::json& j, Mode m) { j = std::string(to_string(m)); }
void from_json(const nlohmann::json& j, Mode& m) { m = parse_mode(j.get<std::string>()); }
void to_json(nlohmann::json& j, Domain d) { j = std::string(to_string(d)); }
void from_json(const nlohmann::json& j, Domain& d) { d = parse_domain(j.get<std::string>()); }
void to_json(nlohmann::json& j, Label l) { j = std::string(to_string(l)); }
void from_json(const nlohmann::json& j, Label& l) { l = parse_label(j.get<std::string>()); }
void to_json(nlohmann::json& j, AttemptVerdict v) { j = std::string(to_string(v)); }
void from_json(const nlohmann::json& j, AttemptVerdict& v) {
  v = parse_attempt_verdict(j.get<std::string>());
}

void to_json(nlohmann::json& j, const TokenUsage& u) {
  j = {{"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}};
}

void from_json(const nlohmann::json& j, TokenUsage& u) {
  u.input_tokens = j.value("input_tokens", std::uint64_t{0});
  u.output_tokens = j.value("output_tokens", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const Claim& c) {
  j = {{"cwe", c.cwe}, {"title", c.title}, {"confidence", c.confidence}, {"evidence", c.evidence}};
  if (c.poc) j["poc"] = *c.poc;
}

void from_json(const nlohmann::json& j, Claim& c) {
  c.cwe = normalize_cwe(j.at("cwe").get<std::string>());
  c.title = j.value("title", std::string{});
  c.confidence = std::clamp(j.value("confidence", 0.0), 0.0, 1.0);
  c.evidence = j.value("evidence", std::string{});
  if (j.contains("poc") && j.at("poc").is_string()) {
    c.poc = j.at("poc").get<std::string>();
  } else {
    c.poc.reset();
  }
}

}  // namespace topobench
