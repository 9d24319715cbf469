#include <doctest.h>

#include "support.hpp"
#include "topobench/cwe.hpp"
#include "topobench/endpoint.hpp"
#include "topobench/registry.hpp"

using namespace tbtest;

namespace {
const std::filesystem::path kData = TOPOBENCH_DATA_DIR;
}

TEST_CASE("cwe ids normalise and order numerically") {
  CHECK(normalize_cwe("cwe-89") == "CWE-89");
  CHECK(normalize_cwe(" CWE 0120 ") == "CWE-120");
  CHECK_FALSE(try_normalize_cwe("SQLi").has_value());
  CHECK_THROWS(normalize_cwe("CWE-"));
  CHECK(cwe_less("CWE-89", "CWE-120"));
  CHECK_FALSE(cwe_less("CWE-120", "CWE-89"));
}

TEST_CASE("endpoints parse by scheme") {
  const auto h = parse_endpoint("http://127.0.0.1:8001/api/login");
  REQUIRE(h);
  CHECK(h->scheme == "http");
  CHECK(h->port == 8001);
  CHECK(h->path == "/api/login");
  const auto t = parse_endpoint("tcp://localhost:9100");
  REQUIRE(t);
  CHECK(t->path.empty());
  CHECK_FALSE(parse_endpoint("ftp://x:1"));
  REQUIRE(parse_endpoint("http://host"));
  CHECK(parse_endpoint("http://host")->port == 80);
  CHECK_FALSE(parse_endpoint("tcp://host"));
  CHECK_FALSE(parse_endpoint("tcp://host:99999"));
}

TEST_CASE("shipped suite loads clean and round-trips") {
  const auto suite = load_suite_file(kData / "suite.json");
  CHECK(suite.core_targets.size() == kRequiredCoreTargets);
  CHECK(validate_suite(suite).empty());
  const auto split = domain_split(suite.core_targets);
  CHECK(split.web + split.binary == 20);
  CHECK(load_suite(serialize_suite(suite).dump()) == suite);
  for (const auto* t : suite.all_targets()) CHECK(suite.find(t->id) == t);
}

TEST_CASE("suite parse errors name the field") {
  CHECK_THROWS_AS(load_suite("{"), ParseError);
  CHECK_THROWS_AS(load_suite(R"({"schema_version": 9, "core_targets": []})"), ParseError);
  try {
    load_suite(R"({"schema_version": 1, "core_targets": [{"id": "W1", "domain": "web", "primary_cwe": "SQLi",
                 "blackbox_endpoint": "http://h:1/"}]})");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.where().find("primary_cwe") != std::string::npos);
  }
}

TEST_CASE("validation reports each mutation kind") {
  auto base = serialize_suite(load_suite_file(kData / "suite.json"));
  auto kinds = [](const nlohmann::json& doc, const ValidationOptions& opt = {}) {
    std::vector<ViolationKind> out;
    for (const auto& v : validate_suite(load_suite(doc.dump()), opt)) out.push_back(v.kind);
    return out;
  };
  auto has = [](const std::vector<ViolationKind>& ks, ViolationKind k) {
    return std::find(ks.begin(), ks.end(), k) != ks.end();
  };
  SUBCASE("duplicate id") {
    auto d = base;
    d["core_targets"][1]["id"] = d["core_targets"][0]["id"];
    CHECK(has(kinds(d), ViolationKind::duplicate_target_id));
  }
  SUBCASE("missing source root only matters with whitebox enabled") {
    auto d = base;
    d["core_targets"][0].erase("whitebox_source_root");
    CHECK(has(kinds(d), ViolationKind::missing_source_root));
    CHECK_FALSE(has(kinds(d, {false}), ViolationKind::missing_source_root));
  }
  SUBCASE("binary target on http endpoint") {
    auto d = base;
    for (auto& t : d["core_targets"]) {
      if (t["domain"] == "binary") {
        t["blackbox_endpoint"] = "http://127.0.0.1:9/x";
        break;
      }
    }
    CHECK(has(kinds(d), ViolationKind::endpoint_scheme_mismatch));
  }
  SUBCASE("stress flag in core list") {
    auto d = base;
    d["core_targets"][0]["stress"] = true;
    CHECK(has(kinds(d), ViolationKind::stress_flag_mismatch));
  }
}

TEST_CASE("mode context withholds the source root in blackbox") {
  const auto suite = load_suite_file(kData / "suite.json");
  const auto& t = suite.core_targets.front();
  CHECK(resolve_mode_context(t, Mode::whitebox).source_root == t.whitebox_source_root);
  CHECK_FALSE(resolve_mode_context(t, Mode::blackbox).source_root.has_value());
  auto bare = t;
  bare.whitebox_source_root.reset();
  CHECK_THROWS_AS(resolve_mode_context(bare, Mode::whitebox), ConfigError);
}

TEST_CASE("blackbox prompts carry no source phrasing") {
  const auto suite = load_suite_file(kData / "suite.json");
  for (const auto* t : suite.all_targets()) {
    const auto white = render_prompts(canonical_templates(), Mode::whitebox, resolve_mode_context(*t, Mode::whitebox));
    const auto black = render_prompts(canonical_templates(), Mode::blackbox, resolve_mode_context(*t, Mode::blackbox));
    CHECK(find_forbidden_phrases(black).empty());
    CHECK(white.mode == Mode::whitebox);
    CHECK(black.user.find(t->blackbox_endpoint) != std::string::npos);
  }
  CHECK(find_forbidden_phrases(render_prompts(canonical_templates(), Mode::whitebox, web_target())).size() > 0);
}

TEST_CASE("substitution applies longest phrase first") {
  for (const auto& s : blackbox_substitutions()) {
    const auto out = apply_blackbox_substitutions(std::string("<") + std::string(s.from) + ">");
    CHECK(out.find(s.from) == std::string::npos);
  }
}
