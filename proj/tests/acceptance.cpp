// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include <unistd.h>

#include "support.hpp"
#include "topobench/bundle.hpp"
#include "topobench/campaign.hpp"
#include "topobench/mock.hpp"
#include "topobench/registry.hpp"

namespace fs = std::filesystem;
using namespace tbtest;

namespace {

const fs::path kData = TOPOBENCH_DATA_DIR;

struct Outcome {
  bool ok = true;
  std::vector<std::string> notes;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / fmt::format("topobench-accept-{}-{}", name, ::getpid());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// --- matrix -----------------------------------------------------------------

Outcome matrix_criterion() {
  Outcome o;
  const auto suite = load_suite_file(kData / "suite.json");
  MatrixConfig m;
  m.model_families = {"gpt-5.2", "claude-opus-4", "kimi-k2"};
  m.suite = &suite;
  const auto a = build_matrix(m);
  const auto b = build_matrix(m);
  o.expect(a.size() == 600, fmt::format("core matrix has {} specs", a.size()));
  o.expect(a == b, "matrix order is deterministic");
  std::set<std::string> ids;
  for (const auto& s : a) ids.insert(s.run_id);
  o.expect(ids.size() == a.size(), "run ids unique");
  if (!a.empty()) {
    o.expect(a.front().architecture == Architecture::sas && a.front().model_family == "gpt-5.2" &&
                 a.front().target_id == suite.core_targets.front().id && a.front().mode == Mode::whitebox,
             "first spec follows the documented nesting");
    o.expect(a[1].mode == Mode::blackbox, "mode is the innermost loop");
  }
  m.include_stress = true;
  const auto s = build_matrix(m);
  o.expect(s.size() == 660, fmt::format("matrix with stress targets has {} specs", s.size()));
  const auto stress = std::count_if(s.begin(), s.end(), [](const RunSpec& r) { return r.stress; });
  o.expect(stress == 60, "60 stress rows");
  o.expect(std::equal(a.begin(), a.end(), s.begin()), "core rows precede stress rows");
  return o;
}

// --- suite mutations --------------------------------------------------------

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k; });
}

Outcome suite_criterion() {
  Outcome o;
  const auto suite = load_suite_file(kData / "suite.json");
  o.expect(validate_suite(suite).empty(), "shipped suite is clean");
  const auto base = serialize_suite(suite);

  auto dropped = base;
  dropped["core_targets"].erase(dropped["core_targets"].size() - 1);
  o.expect(has_kind(validate_suite(load_suite(dropped.dump())), ViolationKind::core_target_count),
           "19 targets reported as core_target_count");

  auto dup = base;
  dup["core_targets"][1]["primary_cwe"] = dup["core_targets"][0]["primary_cwe"];
  o.expect(has_kind(validate_suite(load_suite(dup.dump())), ViolationKind::duplicate_primary_cwe),
           "duplicate CWE reported");

  auto scheme = base;
  for (auto& t : scheme["core_targets"]) {
    if (t["domain"] == "web") {
      t["blackbox_endpoint"] = "tcp://127.0.0.1:9100";
      break;
    }
  }
  o.expect(has_kind(validate_suite(load_suite(scheme.dump())), ViolationKind::endpoint_scheme_mismatch),
           "web target on tcp endpoint reported");
  return o;
}

// --- topology scenario bank -------------------------------------------------

Outcome topology_criterion() {
  Outcome o;
  const auto bank = topology_scenarios();
  o.expect(bank.size() >= 20, fmt::format("bank has {} scenarios", bank.size()));
  for (const auto& sc : bank) {
    Check c;
    try {
      sc.body(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("threw: ") + e.what());
    }
    for (const auto& f : c.failures) o.expect(false, sc.name + ": " + f);
  }
  return o;
}

// --- verifier ---------------------------------------------------------------

fs::path write_reference_bundle(const fs::path& root) {
  auto a = std::make_shared<ScriptedBackend>("scripted");
  a->on_slot("sas/scanner", finds({claim("CWE-22", 0.9), claim("CWE-89", 0.8)}));
  a->on_slot("sas/validator", judges({{"CWE-89", C}}));
  BundleData d;
  d.spec.run_id = "ref";
  d.spec.campaign_id = "accept";
  d.spec.model_family = "scripted";
  d.spec.target_id = "W1";
  d.truth = {"W1", "CWE-89", Domain::web, Mode::whitebox};
  d.report = run(Architecture::sas, scripted_context(a));
  d.report.run_id = "ref";
  d.verdict = adjudicate(d.report, d.truth, utc_timestamp());
  d.wall_anchor = utc_timestamp();
  const auto dir = root / "ref";
  write_bundle(dir, d);
  return dir;
}

void rewrite_jsonl(const fs::path& file, const std::function<void(nlohmann::json&)>& edit) {
  auto lines = read_jsonl_file(file);
  std::string out;
  for (auto& l : lines) {
    edit(l);
    out += l.dump() + "\n";
  }
  write_file_atomic(file, out);
}

Outcome verifier_criterion() {
  Outcome o;
  int mismatches = 0;
  const auto cases = enumerate_oracle_cases();
  for (const auto& [crashed, claims] : cases) {
    const auto r = oracle_report(crashed, claims, "CWE-89");
    const auto v = adjudicate(r, GroundTruth{"W1", "CWE-89", Domain::web, Mode::whitebox});
    if (v.label != oracle_label(crashed, claims)) ++mismatches;
  }
  o.expect(cases.size() == 128, "128 enumerated reports");
  o.expect(mismatches == 0, fmt::format("{} labels disagree with the oracle", mismatches));

  const auto root = scratch("audit");
  const auto ref = write_reference_bundle(root);
  o.expect(load_bundle(ref).verdict.label == Label::tp, "reference bundle is tp");
  o.expect(audit_bundle(ref).clean(), "reference bundle audits clean");

  struct Corruption {
    std::string name;
    std::function<void(const fs::path&)> apply;
  };
  const std::vector<Corruption> corruptions = {
      {"label edit",
       [](const fs::path& d) {
         auto v = read_json_file(d / kVerdictFile);
         v["label"] = "miss";
         write_file_atomic(d / kVerdictFile, v.dump());
       }},
      {"deleted trace", [](const fs::path& d) { fs::remove(d / kTraceFile); }},
      {"blanked evidence",
       [](const fs::path& d) {
         rewrite_jsonl(d / kTraceFile, [](nlohmann::json& l) { l["attempt"]["evidence"] = ""; });
       }},
      {"matched_cwe edit",
       [](const fs::path& d) {
         auto v = read_json_file(d / kVerdictFile);
         v["matched_cwe"] = "CWE-22";
         write_file_atomic(d / kVerdictFile, v.dump());
       }},
      {"garbage run.json", [](const fs::path& d) { write_file_atomic(d / kRunFile, "{not json"); }},
  };
  for (const auto& c : corruptions) {
    const auto dir = root / ("corrupt-" + std::to_string(&c - corruptions.data()));
    fs::copy(ref, dir, fs::copy_options::recursive);
    c.apply(dir);
    o.expect(!audit_bundle(dir).clean(), c.name + " not detected");
  }
  fs::remove_all(root);
  return o;
}

// --- bootstrap --------------------------------------------------------------

Outcome bootstrap_criterion() {
  Outcome o;
  const std::vector<double> ones(20, 1.0);
  const auto d = bootstrap_mean(ones, 1000, 3);
  o.expect(d.point == 1.0 && d.lo == 1.0 && d.hi == 1.0, "degenerate sample gives a zero-width interval");

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rates;
  for (int i = 0; i < 20; ++i) rates.push_back(std::round(u(gen) * 3.0) / 3.0);
  const auto a = bootstrap_mean(rates, kDefaultResamples, 42);
  const auto b = bootstrap_mean(rates, kDefaultResamples, 42);
  o.expect(a.lo == b.lo && a.hi == b.hi, "same seed gives identical bounds");
  o.expect(a.lo <= a.point && a.point <= a.hi, "interval contains the point estimate");
  const auto [lo, hi] = oracle_bootstrap(rates, kDefaultResamples, 99);
  o.expect(std::abs(a.lo - lo) <= 0.02, fmt::format("lower bound {:.4f} vs oracle {:.4f}", a.lo, lo));
  o.expect(std::abs(a.hi - hi) <= 0.02, fmt::format("upper bound {:.4f} vs oracle {:.4f}", a.hi, hi));
  return o;
}

// --- frontier and routing ----------------------------------------------------

Outcome frontier_criterion() {
  Outcome o;
  std::mt19937_64 gen(5);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = std::uniform_int_distribution<int>(1, 10)(gen);
    std::uniform_int_distribution<int> coarse(0, 6);  // coarse grid forces ties
    std::vector<FrontierPoint> pts;
    std::vector<std::pair<double, double>> raw;
    for (int i = 0; i < n; ++i) {
      FrontierPoint p;
      p.architecture = kAllArchitectures[static_cast<std::size_t>(i) % 5];
      p.mode = i < 5 ? Mode::whitebox : Mode::blackbox;
      p.x = coarse(gen) * 0.05;
      p.y = coarse(gen) / 6.0;
      pts.push_back(p);
      raw.emplace_back(*p.x, p.y);
    }
    const auto front = pareto_frontier(pts);
    const auto expect = oracle_frontier(raw);
    std::multiset<std::pair<double, double>> got_set, want_set;
    for (const auto& p : front) got_set.emplace(*p.x, p.y);
    for (auto i : expect) want_set.insert(raw[i]);
    bool sorted = std::is_sorted(front.begin(), front.end(),
                                 [](const FrontierPoint& l, const FrontierPoint& r) { return *l.x < *r.x; });
    if (got_set != want_set || !sorted) ++bad;
  }
  o.expect(bad == 0, fmt::format("{} of 1000 random sets disagree with the oracle", bad));

  std::vector<ArchEstimate> est = {{Architecture::sas, 0.6, 0.14}, {Architecture::mas_hybrid, 0.5, 0.05}};
  o.expect(route(est, 2.0).architecture == Architecture::mas_hybrid, "lambda=2 picks the cheaper architecture");
  o.expect(route(est, 0.0).architecture == Architecture::sas, "lambda=0 picks the highest success rate");

  std::uniform_real_distribution<double> u(0.0, 1.0);
  int shift_bad = 0;
  int zero_bad = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<ArchEstimate> es;
    for (auto a : kAllArchitectures) es.push_back({a, u(gen), u(gen)});
    const double lambda = 3.0 * u(gen);
    auto shifted = es;
    const double k = u(gen);
    for (auto& e : shifted) e.s_hat += k;
    if (route(es, lambda).architecture != route(shifted, lambda).architecture) ++shift_bad;
    const auto best = std::max_element(es.begin(), es.end(),
                                       [](const ArchEstimate& l, const ArchEstimate& r) { return l.s_hat < r.s_hat; });
    if (route(es, 0.0).architecture != best->architecture) ++zero_bad;
  }
  o.expect(shift_bad == 0, "routing invariant under a constant shift of success rates");
  o.expect(zero_bad == 0, "lambda=0 routes to argmax success rate");
  return o;
}

// --- end-to-end mock campaign -----------------------------------------------

double expected_tp_rate(Architecture a, double p) {
  switch (a) {
    case Architecture::sas:
    case Architecture::mas_central: return p;
    case Architecture::mas_indep:
    case Architecture::mas_decent: return 1 - std::pow(1 - p, 3);
    case Architecture::mas_hybrid: return 1 - std::pow(1 - p, 2);
  }
  return 0;
}

Outcome e2e_criterion() {
  Outcome o;
  auto config = load_campaign_config(kData / "sim.json");
  auto fleet = start_mock_fleet();
  MatrixConfig m;
  m.campaign_id = config.campaign_id;
  m.model_families = config.family_names;
  m.suite = &fleet.suite;
  m.budget = config.budget;
  m.seed = config.seed;
  const auto specs = build_matrix(m);
  o.expect(specs.size() == 20, fmt::format("{} specs planned", specs.size()));

  const auto registry = build_registry(config, fleet.simulated);
  CampaignOptions opts;
  opts.out_dir = scratch("e2e");
  opts.parallelism = 2;
  if (config.prices_path) opts.prices = load_price_table(*config.prices_path);
  opts.grace_s = config.grace_s;
  const auto result = execute_campaign(specs, fleet.suite, registry, opts);
  fleet.stop_all();

  o.expect(result.bundles.size() == 20 && result.all_persisted, "20 bundles persisted");
  o.expect(result.peak_concurrency <= 2, "concurrency bounded by 2");
  int tp[2] = {0, 0};
  int validated[2] = {0, 0};
  for (const auto& dir : list_bundles(opts.out_dir)) {
    for (const auto& f : canonical_bundle_files()) o.expect(fs::exists(dir / f), dir.filename().string() + " lacks " + f);
    const auto audit = audit_bundle(dir);
    o.expect(audit.clean(), dir.filename().string() + " audit flags");
    const auto b = load_bundle(dir);
    const int mi = b.spec.mode == Mode::whitebox ? 0 : 1;
    tp[mi] += b.verdict.label == Label::tp;
    validated[mi] += b.report.validated;
  }
  o.expect(validated[0] > validated[1],
           fmt::format("whitebox validated {} not above blackbox {}", validated[0], validated[1]));

  const double p[2] = {0.9, 0.3};
  for (int mi = 0; mi < 2; ++mi) {
    double mean = 0, var = 0;
    for (auto a : kAllArchitectures) {
      const double q = expected_tp_rate(a, p[mi]);
      mean += 2 * q;  // two targets
      var += 2 * q * (1 - q);
    }
    const double sd = std::sqrt(var);
    o.expect(std::abs(tp[mi] - mean) <= 3 * sd,
             fmt::format("{} tp count {} outside {:.2f} +- 3*{:.2f}", mi == 0 ? "whitebox" : "blackbox", tp[mi], mean, sd));
  }
  std::cerr << fmt::format("  e2e: tp whitebox={} blackbox={}\n", tp[0], tp[1]);
  fs::remove_all(opts.out_dir);
  return o;
}

// --- blackbox hygiene --------------------------------------------------------

Outcome hygiene_criterion() {
  Outcome o;
  const auto suite = load_suite_file(kData / "suite.json");
  const auto phrases = forbidden_source_phrases();
  for (const auto* t : suite.all_targets()) {
    const auto ctx_target = resolve_mode_context(*t, Mode::blackbox);
    const auto bundle = render_prompts(canonical_templates(), Mode::blackbox, ctx_target);
    o.expect(find_forbidden_phrases(bundle).empty(), t->id + ": rendered prompts leak source phrasing");
    for (auto arch : kAllArchitectures) {
      auto inner = std::make_shared<ScriptedBackend>("scripted");
      inner->on_role(Role::scanner, finds({claim(t->primary_cwe, 0.6)}));
      inner->on_role(Role::planner, finds({claim(t->primary_cwe, 0.6)}));
      inner->on_role(Role::sandbox, finds({claim("CWE-22", 0.5)}));
      auto rec = std::make_shared<RecordingBackend>(inner);
      EngineContext ctx;
      ctx.run_id = "hygiene";
      ctx.target = ctx_target;
      ctx.prompts = bundle;
      ctx.agents.scanner = rec;
      ctx.agents.validator = rec;
      RunBudget budget(30);
      run_engine(arch, ctx, budget);
      for (const auto& req : rec->requests()) {
        o.expect(!req.target || !req.target->source_root, t->id + ": source root handed to an agent");
        for (const auto& msg : req.messages) {
          for (const auto ph : phrases) {
            if (msg.content.find(ph) != std::string::npos) {
              o.expect(false, fmt::format("{} {} {}: '{}' reached an agent", t->id, to_string(arch), req.slot, ph));
            }
          }
          if (t->whitebox_source_root && msg.content.find(*t->whitebox_source_root) != std::string::npos) {
            o.expect(false, t->id + ": source path reached an agent");
          }
        }
      }
    }
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"registry: run matrix size and order", matrix_criterion},
      {"registry: suite validation catches mutations", suite_criterion},
      {"topology: scenario bank", topology_criterion},
      {"verifier: label oracle and audit corruptions", verifier_criterion},
      {"analytics: bootstrap intervals", bootstrap_criterion},
      {"analytics: frontier and routing", frontier_criterion},
      {"campaign: end-to-end mock campaign", e2e_criterion},
      {"prompts: blackbox hygiene across architectures", hygiene_criterion},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << c.name << "\n";
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    failed += !o.ok;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", std::size(criteria) - static_cast<std::size_t>(failed),
                           std::size(criteria));
  return failed == 0 ? 0 : 1;
}
