#include <doctest.h>

#include <filesystem>

#include "support.hpp"
#include "topobench/bundle.hpp"
#include "topobench/campaign.hpp"
#include "topobench/mock.hpp"
#include "topobench/net.hpp"

namespace fs = std::filesystem;
using namespace tbtest;

namespace {

const fs::path kData = TOPOBENCH_DATA_DIR;

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("topobench-unit-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("mock trigger predicates") {
  CHECK(http_login_triggers("admin' or 1=1 --", "x"));
  CHECK(http_login_triggers("x", "' OR 1=1"));
  CHECK_FALSE(http_login_triggers("admin", "hunter2"));
  CHECK(tcp_record_triggers(std::string(65, 'A')));
  CHECK_FALSE(tcp_record_triggers(std::string(64, 'A')));
}

TEST_CASE("mock fleet answers, mutates and resets") {
  auto fleet = start_mock_fleet();
  REQUIRE(fleet.services.size() == 2);
  CHECK(validate_suite(fleet.suite, {false}).size() == 1);  // two targets instead of twenty
  ReplayValidatorBackend replay;
  for (std::size_t i = 0; i < fleet.services.size(); ++i) {
    auto& svc = *fleet.services[i];
    const auto& sim = fleet.simulated[i];
    AgentRequest req;
    req.role = Role::validator;
    req.target = TargetContext{svc.spec().id, svc.spec().domain, Mode::blackbox, svc.endpoint(), std::nullopt};
    req.claim = claim(sim.truth_cwe, 0.9, sim.exploit_poc);
    CHECK(parse_agent_reply(replay.complete(req).content).verdict == AttemptVerdict::confirmed);
    CHECK(svc.mutation_counter() == 1);
    req.claim = claim(sim.truth_cwe, 0.9, "harmless");
    CHECK(parse_agent_reply(replay.complete(req).content).verdict == AttemptVerdict::rejected);
    const auto* t = fleet.suite.find(svc.spec().id);
    REQUIRE(t);
    CHECK(reset_target(*t).ok);
    CHECK(svc.mutation_counter() == 0);
  }
  fleet.stop_all();
  for (auto& s : fleet.services) CHECK_FALSE(s->running());
}

TEST_CASE("reset reports an unreachable target") {
  TargetSpec t;
  t.id = "X";
  t.blackbox_endpoint = "http://127.0.0.1:1/x";
  ResetOptions opt;
  opt.health_retries = 2;
  opt.retry_interval = std::chrono::milliseconds(10);
  CHECK_FALSE(reset_target(t, opt).ok);
}

TEST_CASE("matrix configuration errors") {
  const auto suite = load_suite_file(kData / "suite.json");
  MatrixConfig m;
  m.suite = &suite;
  CHECK_THROWS_AS(build_matrix(m), ConfigError);
  m.model_families = {"a"};
  m.architectures.clear();
  CHECK_THROWS_AS(build_matrix(m), ConfigError);
}

TEST_CASE("run ids are stable and distinct") {
  const auto a = make_run_id("c", Architecture::sas, "m", "W1", Mode::whitebox, 1);
  CHECK(a == make_run_id("c", Architecture::sas, "m", "W1", Mode::whitebox, 1));
  CHECK(a != make_run_id("c", Architecture::sas, "m", "W1", Mode::blackbox, 1));
  CHECK(a.rfind("SAS_m_W1_whitebox_", 0) == 0);
}

TEST_CASE("campaign config loads and builds backends") {
  const auto cfg = load_campaign_config(kData / "sim.json");
  CHECK(cfg.mock_targets);
  CHECK(cfg.family_names == std::vector<std::string>{"sim"});
  const auto reg = build_registry(cfg);
  CHECK(reg.has("sim"));
  const auto core = load_campaign_config(kData / "core.json");
  CHECK(core.family_names.size() == 3);
}

TEST_CASE("campaign resumes and reruns infra errors") {
  auto fleet = start_mock_fleet();
  auto cfg = load_campaign_config(kData / "sim.json");
  MatrixConfig m;
  m.campaign_id = "unit";
  m.model_families = cfg.family_names;
  m.suite = &fleet.suite;
  m.architectures = {Architecture::sas};
  m.seed = 1;
  const auto specs = build_matrix(m);
  const auto reg = build_registry(cfg, fleet.simulated);
  CampaignOptions opt;
  opt.out_dir = fresh_dir("campaign");
  opt.prices = load_price_table(kData / "prices.json");
  const auto first = execute_campaign(specs, fleet.suite, reg, opt);
  CHECK(first.bundles.size() == 4);
  CHECK(first.all_persisted);
  const auto verdict_time = fs::last_write_time(first.bundles[0] / kVerdictFile);
  const auto second = execute_campaign(specs, fleet.suite, reg, opt);
  CHECK(second.bundles.size() == 4);
  CHECK(fs::last_write_time(first.bundles[0] / kVerdictFile) == verdict_time);

  // Knock one target offline: its runs become infra errors, then a rerun recovers them.
  fs::remove_all(opt.out_dir);
  auto broken_suite = fleet.suite;
  broken_suite.core_targets[0].blackbox_endpoint = "http://127.0.0.1:1/api/login";
  broken_suite.core_targets[0].reset_hook.reset();
  broken_suite.core_targets[0].health_hook.reset();
  opt.reset.health_retries = 1;
  opt.reset.retry_interval = std::chrono::milliseconds(10);
  const auto bad = execute_campaign(specs, broken_suite, reg, opt);
  CHECK(bad.infra_errors == 2);
  const auto again = rerun_infra_errors(fleet.suite, reg, opt);
  CHECK(again.bundles.size() == 2);
  CHECK(again.infra_errors == 0);
  for (const auto& d : list_bundles(opt.out_dir)) CHECK(audit_bundle(d).clean());
  fleet.stop_all();
  fs::remove_all(opt.out_dir);
}

TEST_CASE("a campaign with parallelism two never exceeds two runs in flight") {
  auto fleet = start_mock_fleet();
  auto cfg = load_campaign_config(kData / "sim.json");
  MatrixConfig m;
  m.model_families = cfg.family_names;
  m.suite = &fleet.suite;
  const auto specs = build_matrix(m);
  CampaignOptions opt;
  opt.out_dir = fresh_dir("parallel");
  opt.prices = load_price_table(kData / "prices.json");
  opt.parallelism = 2;
  const auto r = execute_campaign(specs, fleet.suite, build_registry(cfg, fleet.simulated), opt);
  CHECK(r.peak_concurrency <= 2);
  CHECK(r.bundles.size() == 20);
  CHECK(fs::exists(opt.out_dir / "campaign_activity.jsonl"));
  fleet.stop_all();
  fs::remove_all(opt.out_dir);
}
