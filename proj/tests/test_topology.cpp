#include <doctest.h>

#include "support.hpp"

using namespace tbtest;

TEST_CASE("topology scenario bank") {
  for (const auto& sc : topology_scenarios()) {
    SUBCASE(sc.name.c_str()) {
      Check c;
      sc.body(c);
      for (const auto& f : c.failures) FAIL_CHECK(f);
    }
  }
}

TEST_CASE("cost cap stops further invocations without an infra label") {
  auto a = std::make_shared<ScriptedBackend>("scripted");
  a->on_slot("sas/scanner", finds({claim("CWE-22", 0.9), claim("CWE-89", 0.8)}));
  a->on_slot("sas/validator", judges({{"CWE-89", C}}));
  const auto ctx = scripted_context(a);
  // one scanner call (1000 in) fits; the first validation exhausts the cap.
  RunBudget budget(30, 5, 1.5, [](const TokenUsage& u) { return static_cast<double>(u.input_tokens) / 1000.0; });
  const auto r = run_engine(Architecture::sas, ctx, budget);
  CHECK(r.status != RunStatus::infra_error);
  CHECK(r.attempts.size() == 1);
  CHECK_FALSE(r.validated);
}

TEST_CASE("outer timeout stops a stalled agent") {
  auto a = std::make_shared<ScriptedBackend>("scripted");
  auto slow = finds({claim("CWE-89", 0.5)});
  slow.stall_seconds = 5;
  a->on_role(Role::scanner, slow);
  const auto ctx = scripted_context(a);
  const auto r = run(Architecture::sas, ctx, 0.3);
  CHECK(r.status == RunStatus::infra_error);
  CHECK(r.wall_time < 3.0);
}

TEST_CASE("report json round-trips") {
  auto a = std::make_shared<ScriptedBackend>("scripted");
  a->on_role(Role::scanner, finds({claim("CWE-89", 0.5)}));
  a->on_role(Role::validator, judges({{"CWE-89", C}}));
  for (auto arch : kAllArchitectures) {
    auto r = run(arch, scripted_context(a));
    r.invocations.clear();
    CHECK(nlohmann::json(r).get<RunReport>() == r);
  }
}

TEST_CASE("sequential branches give the same report as parallel ones") {
  auto a = std::make_shared<ScriptedBackend>("scripted");
  a->on_role(Role::scanner, finds({claim("CWE-22", 0.7), claim("CWE-89", 0.6)}));
  a->on_role(Role::planner, finds({claim("CWE-89", 0.6)}));
  a->on_role(Role::sandbox, finds({claim("CWE-22", 0.8)}));
  a->on_role(Role::validator, judges({{"CWE-89", C}}));
  for (auto arch : kAllArchitectures) {
    auto par = scripted_context(a);
    auto seq = par;
    seq.options.parallel_branches = false;
    CHECK(without_times(run(arch, par)) == without_times(run(arch, seq)));
  }
}

TEST_CASE("every engine respects its attempt bound on random scripts") {
  std::mt19937_64 gen(17);
  const std::vector<std::string> cwes = {"CWE-89", "CWE-22", "CWE-79", "CWE-120"};
  std::uniform_int_distribution<std::size_t> pick(0, cwes.size() - 1), len(0, 4);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    auto a = std::make_shared<ScriptedBackend>("scripted");
    auto random_list = [&] {
      std::vector<Claim> cs;
      for (std::size_t i = 0, n = len(gen); i < n; ++i) cs.push_back(claim(cwes[pick(gen)], conf(gen)));
      return cs;
    };
    for (auto role : {Role::scanner, Role::planner, Role::sandbox}) a->on_role(role, finds(random_list()));
    std::map<std::string, AttemptVerdict> vs;
    for (const auto& c : cwes) vs[c] = conf(gen) < 0.4 ? C : R;
    a->on_role(Role::validator, judges(vs));
    for (auto arch : kAllArchitectures) {
      const auto r = run(arch, scripted_context(a));
      Check c;
      common_invariants(c, r);
      for (const auto& f : c.failures) FAIL_CHECK(to_string(arch) << ": " << f);
    }
  }
}
