// topobench: operator entry point for suites, campaigns, scoring and reports.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "topobench/analytics.hpp"
#include "topobench/bundle.hpp"
#include "topobench/campaign.hpp"
#include "topobench/error.hpp"
#include "topobench/mock.hpp"
#include "topobench/registry.hpp"
#include "topobench/report.hpp"
#include "topobench/verifier.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topobench;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kFailure = 2;

struct Options {
  std::string config;
  std::string suite;
  std::string out = "runs";
  std::string format = "table";
  std::string bundles;
  std::string records;
  std::string group_by = "architecture";
  int parallelism = 0;
  std::optional<std::uint64_t> seed;
  double lambda = 0.0;
  int resamples = kDefaultResamples;
  bool include_stress = false;
  bool dry_run = false;
  bool no_whitebox = false;
  bool features = false;
};

std::vector<RunRecord> load_records(const Options& o) {
  if (!o.records.empty()) return read_records(o.records);
  if (o.bundles.empty()) throw ConfigError("pass --bundles DIR or --records FILE");
  std::optional<SuiteManifest> suite;
  if (!o.suite.empty()) suite = load_suite_file(o.suite);
  return records_from_bundles(o.bundles, suite ? &*suite : nullptr);
}

std::vector<Dimension> parse_group_by(const std::string& text) {
  std::vector<Dimension> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) dims.push_back(parse_dimension(part));
  }
  return dims;
}

int cmd_validate(const Options& o) {
  if (o.suite.empty()) throw ConfigError("validate needs --suite");
  const auto suite = load_suite_file(o.suite);
  const auto violations = validate_suite(suite, {!o.no_whitebox});
  const auto fmt_kind = parse_report_format(o.format);
  if (fmt_kind == ReportFormat::json) {
    std::cout << json{{"violations", violations}, {"targets", suite.core_targets.size()}}.dump(2) << "\n";
  } else {
    const auto split = domain_split(suite.core_targets);
    std::cout << fmt::format("{} core targets ({} web, {} binary), {} stress targets\n", suite.core_targets.size(),
                             split.web, split.binary, suite.stress_targets.size());
    for (const auto& v : violations) {
      std::cout << fmt::format("{}: {}{}\n", to_string(v.kind), v.target_id.empty() ? "" : v.target_id + ": ",
                               v.message);
    }
    std::cout << (violations.empty() ? "suite ok\n" : fmt::format("{} violation(s)\n", violations.size()));
  }
  return violations.empty() ? kOk : kFindings;
}

struct Prepared {
  CampaignConfig config;
  SuiteManifest suite;
  std::optional<MockFleet> fleet;
  std::vector<RunSpec> specs;
};

Prepared prepare(const Options& o, bool start_mocks) {
  if (o.config.empty()) throw ConfigError("--config is required");
  Prepared p;
  p.config = load_campaign_config(o.config);
  if (o.seed) p.config.seed = *o.seed;
  if (o.include_stress) p.config.include_stress = true;
  if (o.parallelism > 0) p.config.parallelism = o.parallelism;
  if (!o.suite.empty()) p.config.suite_path = o.suite;

  if (p.config.mock_targets) {
    if (start_mocks) {
      p.fleet = start_mock_fleet();
      p.suite = p.fleet->suite;
    } else {
      // Planning needs only ids; endpoints are resolved when the mocks start.
      for (const char* id : {"M1", "M2"}) {
        TargetSpec t;
        t.id = id;
        p.suite.core_targets.push_back(t);
      }
    }
  } else {
    if (p.config.suite_path.empty()) throw ConfigError("config names no suite");
    p.suite = load_suite_file(p.config.suite_path);
    const auto violations = validate_suite(p.suite);
    if (!violations.empty()) {
      for (const auto& v : violations) std::cerr << to_string(v.kind) << ": " << v.message << "\n";
      throw ConfigError(fmt::format("suite has {} violation(s)", violations.size()));
    }
  }
  MatrixConfig m;
  m.campaign_id = p.config.campaign_id;
  m.architectures = p.config.architectures;
  m.model_families = p.config.family_names;
  m.suite = &p.suite;
  m.modes = p.config.modes;
  m.include_stress = p.config.include_stress;
  m.budget = p.config.budget;
  m.seed = p.config.seed;
  p.specs = build_matrix(m);
  return p;
}

int cmd_plan(const Options& o) {
  const auto p = prepare(o, false);
  if (parse_report_format(o.format) == ReportFormat::json) {
    std::cout << json{{"runs", p.specs.size()}, {"specs", p.specs}}.dump(2) << "\n";
    return kOk;
  }
  std::size_t stress = 0;
  for (const auto& s : p.specs) stress += s.stress ? 1 : 0;
  std::cout << fmt::format("{} runs\n", p.specs.size());
  std::cout << fmt::format("  {} architectures x {} model families x {} targets x {} modes", p.config.architectures.size(),
                           p.config.family_names.size(), p.suite.core_targets.size(), p.config.modes.size());
  if (stress) std::cout << fmt::format(" + {} stress runs", stress);
  std::cout << "\n";
  if (!o.dry_run) {
    for (const auto& s : p.specs) std::cout << "  " << s.run_id << "\n";
  }
  return kOk;
}

CampaignOptions campaign_options(const Options& o, const Prepared& p) {
  CampaignOptions c;
  c.out_dir = o.out;
  c.parallelism = p.config.parallelism;
  if (p.config.prices_path) c.prices = load_price_table(*p.config.prices_path);
  if (p.config.templates_path) c.templates = load_templates(*p.config.templates_path);
  c.engine.hybrid_recheck = p.config.hybrid_recheck;
  c.engine.max_tool_turns = p.config.max_tool_turns;
  c.grace_s = p.config.grace_s;
  for (const auto& f : p.config.family_names) {
    if (!c.prices.count(f)) throw ConfigError("price table has no entry for model family " + f);
  }
  c.on_run_finished = [](const RunSpec& s, const Verdict& v) {
    std::cerr << fmt::format("{:<12} {}\n", to_string(v.label), s.run_id);
  };
  return c;
}

int report_campaign(const CampaignResult& r) {
  std::cout << fmt::format("{} bundles, {} infra_error, peak concurrency {}\n", r.bundles.size(), r.infra_errors,
                           r.peak_concurrency);
  return r.all_persisted ? kOk : kFailure;
}

int cmd_run(const Options& o) {
  auto p = prepare(o, !o.dry_run);
  if (o.dry_run) {
    std::cout << fmt::format("{} runs\n", p.specs.size());
    return kOk;
  }
  const auto registry = build_registry(p.config, p.fleet ? p.fleet->simulated : std::vector<SimulatedTarget>{});
  const auto options = campaign_options(o, p);
  const auto result = execute_campaign(p.specs, p.suite, registry, options);
  if (p.fleet) p.fleet->stop_all();
  return report_campaign(result);
}

int cmd_rerun(const Options& o) {
  auto p = prepare(o, true);
  const auto registry = build_registry(p.config, p.fleet ? p.fleet->simulated : std::vector<SimulatedTarget>{});
  const auto result = rerun_infra_errors(p.suite, registry, campaign_options(o, p));
  if (p.fleet) p.fleet->stop_all();
  return report_campaign(result);
}

int cmd_score(const Options& o) {
  // With --bundles, --records names an output file for the flattened records.
  Options src = o;
  if (!o.bundles.empty()) src.records.clear();
  const auto records = load_records(src);
  if (!o.bundles.empty() && !o.records.empty()) write_records(o.records, records);
  std::array<std::size_t, 5> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.label)];
  if (parse_report_format(o.format) == ReportFormat::json) {
    json j = {{"runs", records.size()}};
    for (auto l : kAllLabels) j[std::string(to_string(l))] = counts[static_cast<std::size_t>(l)];
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << fmt::format("{} runs:", records.size());
    for (auto l : kAllLabels) std::cout << fmt::format(" {}={}", to_string(l), counts[static_cast<std::size_t>(l)]);
    std::cout << "\n";
  }
  return kOk;
}

int cmd_audit(const Options& o) {
  if (o.bundles.empty()) throw ConfigError("audit needs --bundles");
  const auto dirs = list_bundles(o.bundles);
  std::size_t flagged = 0;
  json out = json::array();
  for (const auto& d : dirs) {
    const auto r = audit_bundle(d);
    if (!r.clean()) ++flagged;
    out.push_back(r);
  }
  if (parse_report_format(o.format) == ReportFormat::json) {
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& r : out) {
      for (const auto& f : r["flags"]) {
        std::cout << fmt::format("{}: {} {}\n", r["bundle"].get<std::string>(), f["kind"].get<std::string>(),
                                 f["detail"].get<std::string>());
      }
    }
    std::cout << fmt::format("{} bundles audited, {} flagged\n", dirs.size(), flagged);
  }
  return flagged == 0 ? kOk : kFindings;
}

int cmd_report(const Options& o) {
  const auto records = load_records(o);
  const auto dims = parse_group_by(o.group_by);
  std::vector<std::string> keys;
  for (auto d : dims) keys.emplace_back(to_string(d));
  const auto summaries = summarize(records, dims);
  std::cout << emit_report(summaries, parse_report_format(o.format), keys);
  return kOk;
}

int cmd_frontier(const Options& o) {
  const auto records = load_records(o);
  const auto points = frontier_points(records, o.resamples, o.seed.value_or(0));
  const auto files = emit_frontier(points, o.out);
  std::cout << fmt::format("wrote {} and {}\n", files.csv.string(), files.svg.string());
  return kOk;
}

int cmd_route(const Options& o) {
  const auto records = load_records(o);
  ContextKeys keys;
  keys.feature_bin = o.features;
  const auto estimates = fit_estimates(records, keys, o.lambda);
  const auto table = route_table(estimates, o.lambda);
  if (parse_report_format(o.format) == ReportFormat::json) {
    json j = {{"lambda", o.lambda}, {"estimates", json::array()}, {"routes", json::array()}};
    for (const auto& e : estimates) {
      j["estimates"].push_back({{"architecture", e.architecture}, {"context", e.context}, {"s_hat", e.s_hat},
                                {"c_hat", e.c_hat}, {"u_hat", e.u_hat}, {"n", e.n}, {"flag", to_string(e.flag)}});
    }
    for (const auto& [ctx, d] : table) j["routes"].push_back({{"context", ctx}, {"architecture", d.architecture}});
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  for (const auto& e : estimates) {
    if (e.flag == CellFlag::missing) {
      std::cout << fmt::format("{:<28} {:<11} missing\n", e.context, to_string(e.architecture));
    } else {
      std::cout << fmt::format("{:<28} {:<11} S={:.3f} C={:.4f} U={:.4f} n={}{}\n", e.context, to_string(e.architecture),
                               e.s_hat, e.c_hat, e.u_hat, e.n, e.flag == CellFlag::single_run ? " (single run)" : "");
    }
  }
  for (const auto& [ctx, d] : table) std::cout << fmt::format("route {} -> {}\n", ctx, to_string(d.architecture));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordination-topology benchmark harness for security-auditing agents"};
  app.require_subcommand(1);
  Options o;

  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", o.format, "table, json or csv")->check(CLI::IsMember({"table", "json", "csv"}));
  };
  auto add_records = [&](CLI::App* c) {
    c->add_option("--bundles", o.bundles, "Directory of run bundles");
    c->add_option("--records", o.records, "Aggregate records file (.json or .csv)");
    c->add_option("--suite", o.suite, "Suite manifest (feature bins)");
  };
  auto add_campaign = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Campaign config (JSON)")->required();
    c->add_option("--suite", o.suite, "Override the config's suite manifest");
    c->add_option("--out", o.out, "Bundle output directory");
    c->add_option("--parallelism", o.parallelism, "Concurrent runs")->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seed, "Campaign seed");
    c->add_flag("--include-stress", o.include_stress, "Append stress-target rows");
    c->add_flag("--dry-run", o.dry_run, "Only build the run matrix");
  };

  auto* validate = app.add_subcommand("validate", "Check a suite manifest against the benchmark contract");
  validate->add_option("--suite", o.suite, "Suite manifest")->required();
  validate->add_flag("--no-whitebox", o.no_whitebox, "Do not require source roots");
  add_format(validate);

  auto* plan = app.add_subcommand("plan", "Build the run matrix");
  add_campaign(plan);
  add_format(plan);

  auto* run = app.add_subcommand("run", "Execute a campaign");
  add_campaign(run);

  auto* rerun = app.add_subcommand("rerun", "Re-execute infra_error bundles");
  add_campaign(rerun);

  auto* score = app.add_subcommand("score", "Count verdict labels");
  add_records(score);
  add_format(score);

  auto* audit = app.add_subcommand("audit", "Audit bundle consistency");
  audit->add_option("--bundles", o.bundles, "Directory of run bundles")->required();
  add_format(audit);

  auto* report = app.add_subcommand("report", "Summary tables");
  add_records(report);
  add_format(report);
  report->add_option("--group-by", o.group_by, "Comma-separated dimensions");

  auto* frontier = app.add_subcommand("frontier", "Cost-quality frontier plot data");
  add_records(frontier);
  frontier->add_option("--out", o.out, "Output directory");
  frontier->add_option("--seed", o.seed, "Bootstrap seed");
  frontier->add_option("--resamples", o.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);

  auto* route = app.add_subcommand("route", "Fit estimates and route architectures");
  add_records(route);
  add_format(route);
  route->add_option("--lambda", o.lambda, "Cost weight")->check(CLI::NonNegativeNumber);
  route->add_flag("--features", o.features, "Include task-feature bins in the context");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kFailure;
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*plan) return cmd_plan(o);
    if (*run) return cmd_run(o);
    if (*rerun) return cmd_rerun(o);
    if (*score) return cmd_score(o);
    if (*audit) return cmd_audit(o);
    if (*report) return cmd_report(o);
    if (*frontier) return cmd_frontier(o);
    if (*route) return cmd_route(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
