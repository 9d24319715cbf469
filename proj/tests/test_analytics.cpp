#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "topobench/report.hpp"

namespace fs = std::filesystem;
using namespace tbtest;

namespace {

RunRecord rec(Architecture a, Mode m, Label l, const std::string& target, double cost, std::optional<double> ttfv = {}) {
  RunRecord r;
  r.run_id = fmt::format("{}-{}-{}", to_string(a), to_string(m), target);
  r.architecture = a;
  r.model_family = "m";
  r.mode = m;
  r.target_id = target;
  r.label = l;
  r.cost_in = cost / 2;
  r.cost_out = cost / 2;
  r.ttfv = ttfv;
  return r;
}

}  // namespace

TEST_CASE("summary metrics") {
  std::vector<RunRecord> rs = {
      rec(Architecture::sas, Mode::whitebox, Label::tp, "T1", 1.0, 10.0),
      rec(Architecture::sas, Mode::whitebox, Label::tp, "T2", 1.0, 30.0),
      rec(Architecture::sas, Mode::whitebox, Label::partial, "T3", 1.0),
      rec(Architecture::sas, Mode::whitebox, Label::fp, "T4", 1.0),
  };
  const auto s = summarize_group(rs);
  CHECK(s.n_runs == 4);
  CHECK(s.validated_rate == doctest::Approx(0.5));
  CHECK(s.detect_any_rate == doctest::Approx(0.75));
  CHECK(s.fp_rate == doctest::Approx(0.25));
  CHECK(s.fp_rate_of_confirmed == doctest::Approx(1.0 / 3.0));
  CHECK(s.median_ttfv == doctest::Approx(20.0));
  CHECK(s.cost_per_validated == doctest::Approx(2.0));
  rs.resize(1);
  rs[0].label = Label::miss;
  CHECK_FALSE(summarize_group(rs).cost_per_validated.has_value());
}

TEST_CASE("grouping follows enum order") {
  std::vector<RunRecord> rs;
  for (auto a : {Architecture::mas_hybrid, Architecture::sas, Architecture::mas_indep})
    rs.push_back(rec(a, Mode::blackbox, Label::tp, "T1", 1.0, 1.0));
  const std::vector<Dimension> dims = {Dimension::architecture};
  const auto groups = summarize(rs, dims);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].key[0].second == "SAS");
  CHECK(groups[2].key[0].second == "MAS-Hybrid");
  CHECK_THROWS_AS(parse_dimension("colour"), ConfigError);
}

TEST_CASE("natural ordering of ids") {
  CHECK(natural_less("W2", "W10"));
  CHECK_FALSE(natural_less("W10", "W2"));
  CHECK(natural_less("B1", "W1"));
}

TEST_CASE("records round-trip through csv and json") {
  const auto dir = fs::temp_directory_path() / "topobench-unit-records";
  fs::create_directories(dir);
  std::vector<RunRecord> rs = {rec(Architecture::sas, Mode::whitebox, Label::tp, "T,1", 0.5, 12.5),
                               rec(Architecture::mas_decent, Mode::blackbox, Label::miss, "T\"2", 0.25)};
  for (const char* name : {"r.csv", "r.json"}) {
    write_records(dir / name, rs);
    const auto back = read_records(dir / name);
    REQUIRE(back.size() == 2);
    CHECK(back[0].target_id == "T,1");
    CHECK(back[1].target_id == "T\"2");
    CHECK(back[0].ttfv == doctest::Approx(12.5));
    CHECK_FALSE(back[1].ttfv.has_value());
    CHECK(back[1].architecture == Architecture::mas_decent);
  }
  fs::remove_all(dir);
}

TEST_CASE("percentiles interpolate linearly") {
  const std::vector<double> v = {0, 10, 20, 30};
  CHECK(percentile_sorted(v, 0.0) == 0);
  CHECK(percentile_sorted(v, 1.0) == 30);
  CHECK(percentile_sorted(v, 0.5) == doctest::Approx(15));
}

TEST_CASE("bootstrap argument checks") {
  const std::vector<double> empty;
  const std::vector<double> one = {0.5};
  CHECK_THROWS_AS(bootstrap_mean(empty, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_mean(one, 0, 0), std::invalid_argument);
  const auto ci = bootstrap_mean(one, 10, 0);
  CHECK(ci.lo == 0.5);
  CHECK(ci.hi == 0.5);
}

TEST_CASE("bootstrap bounds stay near an independent implementation") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(u(gen));
    const auto ci = bootstrap_mean(v, 10000, trial);
    const auto [lo, hi] = oracle_bootstrap(v, 10000, trial + 100);
    CHECK(std::abs(ci.hi - hi) <= 0.02);
    CHECK(std::abs(ci.lo - lo) <= 0.02);
  }
}

TEST_CASE("target-level intervals average per target") {
  const auto rs = bernoulli_records(20, 3, 0.5, 1);
  const auto rates = target_rates(rs, {});
  CHECK(rates.size() == 20);
  const auto ci = bootstrap_ci(rs, {}, 2000, 4);
  CHECK(ci.n_targets == 20);
  CHECK(ci.lo <= ci.point);
  CHECK(ci.point <= ci.hi);
}

TEST_CASE("whitebox separates from blackbox at large n") {
  // 400 targets per arm keeps the 3 sigma margin robust to sampling noise.
  auto white = bernoulli_records(400, 1, 0.9, 10, Architecture::sas, Mode::whitebox);
  const auto black = bernoulli_records(400, 1, 0.3, 11, Architecture::sas, Mode::blackbox);
  white.insert(white.end(), black.begin(), black.end());
  RecordFilter fw, fb;
  fw.mode = Mode::whitebox;
  fb.mode = Mode::blackbox;
  const auto sw = summarize_group(std::vector<RunRecord>(white.begin(), white.begin() + 400));
  const auto sb = summarize_group(std::vector<RunRecord>(white.begin() + 400, white.end()));
  const double se = std::sqrt(sw.validated_rate * (1 - sw.validated_rate) / 400 + sb.validated_rate * (1 - sb.validated_rate) / 400);
  CHECK((sw.validated_rate - sb.validated_rate) / se > 3.0);
  CHECK(bootstrap_ci(white, fw, 2000, 1).lo > bootstrap_ci(white, fb, 2000, 1).hi);
}

TEST_CASE("paired delta needs matching coverage") {
  auto a = bernoulli_records(10, 1, 0.8, 1, Architecture::mas_hybrid);
  auto b = bernoulli_records(10, 1, 0.2, 2, Architecture::sas);
  a.insert(a.end(), b.begin(), b.end());
  const auto d = paired_delta(a, Architecture::mas_hybrid, Architecture::sas, Mode::whitebox, 1000, 1);
  CHECK(d.lo <= d.point);
  CHECK(d.point <= d.hi);
  a.pop_back();
  CHECK_THROWS_AS(paired_delta(a, Architecture::mas_hybrid, Architecture::sas, Mode::whitebox, 100, 1), ConfigError);
}

TEST_CASE("frontier matches the quadratic oracle") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> g(0, 4);
  for (int t = 0; t < 300; ++t) {
    std::vector<FrontierPoint> pts(7);
    std::vector<std::pair<double, double>> raw;
    for (auto& p : pts) {
      p.x = g(gen) * 0.1;
      p.y = g(gen) * 0.25;
      raw.emplace_back(*p.x, p.y);
    }
    CHECK(pareto_frontier(pts).size() == oracle_frontier(raw).size());
  }
}

TEST_CASE("frontier points skip undefined costs") {
  std::vector<RunRecord> rs = {rec(Architecture::sas, Mode::whitebox, Label::tp, "T1", 1.0, 1.0),
                               rec(Architecture::mas_hybrid, Mode::whitebox, Label::miss, "T1", 1.0)};
  const auto pts = frontier_points(rs, 200, 1);
  REQUIRE(pts.size() == 2);
  const auto defined = std::count_if(pts.begin(), pts.end(), [](const FrontierPoint& p) { return p.x.has_value(); });
  CHECK(defined == 1);
  CHECK(pareto_frontier(pts).size() == 1);
}

TEST_CASE("routing rule") {
  std::vector<ArchEstimate> e = {{Architecture::sas, 0.6, 0.14}, {Architecture::mas_hybrid, 0.5, 0.05}};
  const auto d = route(e, 2.0);
  CHECK(d.architecture == Architecture::mas_hybrid);
  CHECK(d.utilities[0] == doctest::Approx(0.32));
  CHECK(d.utilities[1] == doctest::Approx(0.40));
  std::vector<ArchEstimate> tie = {{Architecture::mas_indep, 0.5, 0.2}, {Architecture::sas, 0.5, 0.1}};
  CHECK(route(tie, 0.0).architecture == Architecture::sas);
  CHECK_THROWS_AS(route(e, -1.0), ConfigError);
  CHECK_THROWS_AS(route(std::vector<ArchEstimate>{}, 1.0), ConfigError);
}

TEST_CASE("routing table flags sparse cells") {
  std::vector<RunRecord> rs = {rec(Architecture::sas, Mode::whitebox, Label::tp, "T1", 1.0, 1.0),
                               rec(Architecture::sas, Mode::whitebox, Label::miss, "T2", 1.0),
                               rec(Architecture::mas_hybrid, Mode::whitebox, Label::tp, "T1", 2.0, 1.0)};
  const auto est = fit_estimates(rs, {}, 0.0);
  CHECK(est.size() == 5);
  for (const auto& e : est) {
    if (e.architecture == Architecture::mas_hybrid) CHECK(e.flag == CellFlag::single_run);
    if (e.architecture == Architecture::mas_indep) CHECK(e.flag == CellFlag::missing);
  }
  const auto table = route_table(est, 0.0);
  REQUIRE(table.size() == 1);
  CHECK(table[0].second.architecture == Architecture::mas_hybrid);
}

TEST_CASE("report formats agree on values") {
  std::vector<RunRecord> rs = {rec(Architecture::sas, Mode::whitebox, Label::tp, "T1", 0.5, 12.0),
                               rec(Architecture::sas, Mode::whitebox, Label::miss, "T2", 0.5)};
  const std::vector<Dimension> dims = {Dimension::architecture};
  const auto groups = summarize(rs, dims);
  const std::vector<std::string> keys = {"architecture"};
  const auto table = emit_report(groups, ReportFormat::table, keys);
  const auto csv = emit_report(groups, ReportFormat::csv, keys);
  const auto js = nlohmann::json::parse(emit_report(groups, ReportFormat::json, keys));
  CHECK(table.find("50.0") != std::string::npos);
  CHECK(csv.find("50.0") != std::string::npos);
  CHECK(table.find("1.0000") != std::string::npos);
  CHECK(js.dump().find("50.0") != std::string::npos);
  CHECK_THROWS_AS(parse_report_format("xml"), ConfigError);
}

TEST_CASE("frontier files are written") {
  const auto dir = fs::temp_directory_path() / "topobench-unit-frontier";
  fs::remove_all(dir);
  auto rs = bernoulli_records(10, 1, 0.6, 3, Architecture::sas);
  auto h = bernoulli_records(10, 1, 0.8, 4, Architecture::mas_hybrid);
  rs.insert(rs.end(), h.begin(), h.end());
  const auto files = emit_frontier(frontier_points(rs, 500, 1), dir);
  CHECK(fs::file_size(files.csv) > 0);
  std::ifstream in(files.svg);
  const std::string svg((std::istreambuf_iterator<char>(in)), {});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("marker frontier") != std::string::npos);
  std::vector<FrontierPoint> none(1);
  CHECK_THROWS(emit_frontier(none, dir));
  fs::remove_all(dir);
}
