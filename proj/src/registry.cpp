#include "topobench/registry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "topobench/endpoint.hpp"
#include "topobench/error.hpp"

namespace topobench {

using nlohmann::json;

namespace {

std::size_t line_of(std::string_view doc, std::size_t byte) {
  byte = std::min(byte, doc.size());
  return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + "." + key, "missing field");
  return obj.at(key);
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key, "expected string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) throw ParseError(where + "." + key, "expected string");
  return obj.at(key).get<std::string>();
}

constexpr std::array<const char*, 5> kFeatureKeys = {"surface_entropy", "exploit_depth", "tool_intensity",
                                                     "branching_volatility", "observability_penalty"};

TaskFeatures parse_features(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "expected object");
  std::array<double, 5> values{};
  for (std::size_t i = 0; i < kFeatureKeys.size(); ++i) {
    const auto* key = kFeatureKeys[i];
    if (!obj.contains(key)) {
      throw ParseError(where + "." + key, "feature record must carry all five fields");
    }
    const auto& v = obj.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ParseError(where + "." + key, "expected finite number");
    }
    values[i] = v.get<double>();
  }
  return {values[0], values[1], values[2], values[3], values[4]};
}

TargetSpec parse_target(const json& row, const std::string& where, bool stress) {
  if (!row.is_object()) throw ParseError(where, "expected object");
  TargetSpec t;
  t.id = string_field(row, "id", where);
  try {
    t.domain = parse_domain(string_field(row, "domain", where));
  } catch (const ParseError& e) {
    throw ParseError(where + ".domain", e.what());
  }
  {
    const auto raw = string_field(row, "primary_cwe", where);
    static const std::regex canonical(R"(CWE-[0-9]+)");
    if (!std::regex_match(raw, canonical)) {
      throw ParseError(where + ".primary_cwe", "expected CWE-<digits>, got '" + raw + "'");
    }
    t.primary_cwe = raw;
  }
  t.blackbox_endpoint = string_field(row, "blackbox_endpoint", where);
  if (!parse_endpoint(t.blackbox_endpoint)) {
    throw ParseError(where + ".blackbox_endpoint",
                     "unsupported or malformed endpoint '" + t.blackbox_endpoint + "'");
  }
  t.whitebox_source_root = optional_string(row, "whitebox_source_root", where);
  t.language = row.contains("language") ? string_field(row, "language", where) : std::string{};
  t.description = row.contains("description") ? string_field(row, "description", where) : std::string{};
  if (row.contains("loc")) {
    const auto& loc = row.at("loc");
    if (!loc.is_number_integer() || loc.get<long long>() < 0) {
      throw ParseError(where + ".loc", "expected nonnegative integer");
    }
    t.loc = loc.get<std::uint64_t>();
  }
  t.stress = stress;
  if (row.contains("stress")) {
    if (!row.at("stress").is_boolean()) throw ParseError(where + ".stress", "expected boolean");
    t.stress = row.at("stress").get<bool>();
  }
  if (row.contains("features") && !row.at("features").is_null()) {
    t.features = parse_features(row.at("features"), where + ".features");
  }
  t.reset_hook = optional_string(row, "reset_hook", where);
  t.health_hook = optional_string(row, "health_hook", where);
  return t;
}

json target_to_json(const TargetSpec& t) {
  json j = {{"id", t.id},
            {"domain", t.domain},
            {"primary_cwe", t.primary_cwe},
            {"blackbox_endpoint", t.blackbox_endpoint},
            {"language", t.language},
            {"description", t.description},
            {"loc", t.loc},
            {"stress", t.stress}};
  if (t.whitebox_source_root) j["whitebox_source_root"] = *t.whitebox_source_root;
  if (t.features) {
    const auto& f = *t.features;
    j["features"] = {{"surface_entropy", f.surface_entropy},
                     {"exploit_depth", f.exploit_depth},
                     {"tool_intensity", f.tool_intensity},
                     {"branching_volatility", f.branching_volatility},
                     {"observability_penalty", f.observability_penalty}};
  }
  if (t.reset_hook) j["reset_hook"] = *t.reset_hook;
  if (t.health_hook) j["health_hook"] = *t.health_hook;
  return j;
}

std::vector<TargetSpec> parse_list(const json& doc, const char* key, bool stress) {
  std::vector<TargetSpec> out;
  if (!doc.contains(key)) return out;
  const auto& list = doc.at(key);
  if (!list.is_array()) throw ParseError(key, "expected array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(parse_target(list[i], std::string(key) + "[" + std::to_string(i) + "]", stress));
  }
  return out;
}

}  // namespace

std::vector<const TargetSpec*> SuiteManifest::all_targets() const {
  std::vector<const TargetSpec*> out;
  for (const auto& t : core_targets) out.push_back(&t);
  for (const auto& t : stress_targets) out.push_back(&t);
  return out;
}

const TargetSpec* SuiteManifest::find(std::string_view id) const {
  for (const auto* t : all_targets()) {
    if (t->id == id) return t;
  }
  return nullptr;
}

SuiteManifest load_suite(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(document, e.byte)), e.what());
  }
  if (!doc.is_object()) throw ParseError("", "manifest must be a JSON object");
  if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer()) {
    throw ParseError("schema_version", "missing or non-integer");
  }
  SuiteManifest suite;
  suite.schema_version = doc.at("schema_version").get<int>();
  if (suite.schema_version != kSupportedSchemaVersion) {
    throw ParseError("schema_version", "unsupported version " + std::to_string(suite.schema_version));
  }
  suite.core_targets = parse_list(doc, "core_targets", false);
  suite.stress_targets = parse_list(doc, "stress_targets", true);
  return suite;
}

SuiteManifest load_suite_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open suite manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_suite(buffer.str());
}

json serialize_suite(const SuiteManifest& suite) {
  json core = json::array();
  for (const auto& t : suite.core_targets) core.push_back(target_to_json(t));
  json stress = json::array();
  for (const auto& t : suite.stress_targets) stress.push_back(target_to_json(t));
  return {{"schema_version", suite.schema_version}, {"core_targets", core}, {"stress_targets", stress}};
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::core_target_count: return "core_target_count";
    case ViolationKind::duplicate_primary_cwe: return "duplicate_primary_cwe";
    case ViolationKind::duplicate_target_id: return "duplicate_target_id";
    case ViolationKind::invalid_cwe: return "invalid_cwe";
    case ViolationKind::invalid_endpoint: return "invalid_endpoint";
    case ViolationKind::endpoint_scheme_mismatch: return "endpoint_scheme_mismatch";
    case ViolationKind::missing_source_root: return "missing_source_root";
    case ViolationKind::stress_flag_mismatch: return "stress_flag_mismatch";
  }
  return "?";
}

void to_json(json& j, const Violation& v) {
  j = {{"kind", std::string(to_string(v.kind))}, {"message", v.message}};
  if (!v.target_id.empty()) j["target_id"] = v.target_id;
  if (!v.cwe.empty()) j["cwe"] = v.cwe;
  if (!v.expected.empty()) j["expected"] = v.expected;
  if (!v.got.empty()) j["got"] = v.got;
}

std::vector<Violation> validate_suite(const SuiteManifest& suite, const ValidationOptions& options) {
  std::vector<Violation> out;

  if (suite.core_targets.size() != kRequiredCoreTargets) {
    out.push_back({ViolationKind::core_target_count, "", "", std::to_string(kRequiredCoreTargets),
                   std::to_string(suite.core_targets.size()),
                   "expected exactly 20 core targets"});
  }

  // Duplicate CWEs reported once per CWE, in order of first occurrence.
  std::map<std::string, std::vector<std::string>> owners;
  std::vector<std::string> cwe_order;
  for (const auto& t : suite.core_targets) {
    auto& ids = owners[t.primary_cwe];
    if (ids.empty()) cwe_order.push_back(t.primary_cwe);
    ids.push_back(t.id);
  }
  for (const auto& cwe : cwe_order) {
    const auto& ids = owners[cwe];
    if (ids.size() < 2) continue;
    std::string who;
    for (const auto& id : ids) who += (who.empty() ? "" : ",") + id;
    out.push_back({ViolationKind::duplicate_primary_cwe, "", cwe, "1", std::to_string(ids.size()),
                   "primary CWE shared by core targets " + who});
  }

  std::set<std::string> seen_ids;
  static const std::regex canonical(R"(CWE-[1-9][0-9]*|CWE-0)");
  for (const auto* t : suite.all_targets()) {
    if (!seen_ids.insert(t->id).second) {
      out.push_back({ViolationKind::duplicate_target_id, t->id, "", "", "", "target id is not unique"});
    }
    if (!std::regex_match(t->primary_cwe, canonical)) {
      out.push_back({ViolationKind::invalid_cwe, t->id, t->primary_cwe, "CWE-<digits>", t->primary_cwe,
                     "primary CWE is not canonical"});
    }
    const auto ep = parse_endpoint(t->blackbox_endpoint);
    if (!ep) {
      out.push_back({ViolationKind::invalid_endpoint, t->id, "", "", t->blackbox_endpoint,
                     "endpoint is not syntactically reachable"});
    } else {
      const bool web_ok = t->domain == Domain::web && (ep->scheme == "http" || ep->scheme == "https");
      const bool bin_ok = t->domain == Domain::binary && ep->scheme == "tcp";
      if (!web_ok && !bin_ok) {
        out.push_back({ViolationKind::endpoint_scheme_mismatch, t->id, "",
                       t->domain == Domain::web ? "http(s)" : "tcp", ep->scheme,
                       "endpoint scheme does not match target domain"});
      }
    }
    if (options.whitebox_enabled && (!t->whitebox_source_root || t->whitebox_source_root->empty())) {
      out.push_back({ViolationKind::missing_source_root, t->id, "", "", "",
                     "whitebox mode enabled but no source root"});
    }
  }
  for (const auto& t : suite.core_targets) {
    if (t.stress) {
      out.push_back({ViolationKind::stress_flag_mismatch, t.id, "", "false", "true",
                     "core target flagged as stress"});
    }
  }
  for (const auto& t : suite.stress_targets) {
    if (!t.stress) {
      out.push_back({ViolationKind::stress_flag_mismatch, t.id, "", "true", "false",
                     "stress target not flagged as stress"});
    }
  }
  return out;
}

DomainSplit domain_split(const std::vector<TargetSpec>& targets) {
  DomainSplit split;
  for (const auto& t : targets) (t.domain == Domain::web ? split.web : split.binary) += 1;
  return split;
}

TargetContext resolve_mode_context(const TargetSpec& target, Mode mode) {
  TargetContext ctx{target.id, target.domain, mode, target.blackbox_endpoint, std::nullopt};
  if (mode == Mode::whitebox) {
    if (!target.whitebox_source_root || target.whitebox_source_root->empty()) {
      throw ConfigError("target " + target.id + ": whitebox mode requires a source root");
    }
    ctx.source_root = target.whitebox_source_root;
  }
  return ctx;
}

}  // namespace topobench
