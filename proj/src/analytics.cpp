#include "topobench/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "topobench/bundle.hpp"
#include "topobench/error.hpp"
#include "topobench/rng.hpp"

namespace topobench {

namespace fs = std::filesystem;
using nlohmann::json;

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      auto na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

std::string feature_bin(const std::optional<TaskFeatures>& f, double threshold) {
  if (!f) return "";
  auto c = [&](double v, char lo) { return v >= threshold ? static_cast<char>(std::toupper(lo)) : lo; };
  return {c(f->surface_entropy, 's'), c(f->exploit_depth, 'd'), c(f->tool_intensity, 't'),
          c(f->branching_volatility, 'b'), c(f->observability_penalty, 'o')};
}

// ---------------------------------------------------------------------------
// Record I/O

std::vector<RunRecord> records_from_bundles(const fs::path& root, const SuiteManifest* suite) {
  std::vector<RunRecord> out;
  for (const auto& dir : list_bundles(root)) {
    for (const auto& name : canonical_bundle_files()) {
      if (!fs::is_regular_file(dir / name)) {
        throw IncompleteBundle(name, "incomplete bundle " + dir.string() + ": missing " + name);
      }
    }
    const json run = read_json_file(dir / kRunFile);
    const json verdict = read_json_file(dir / kVerdictFile);
    RunRecord r;
    try {
      const json& spec = run.at("spec");
      const json& report = run.at("report");
      r.run_id = spec.at("run_id").get<std::string>();
      r.architecture = spec.at("architecture").get<Architecture>();
      r.model_family = spec.at("model_family").get<std::string>();
      r.target_id = spec.at("target_id").get<std::string>();
      r.mode = spec.at("mode").get<Mode>();
      r.stress = spec.value("stress", false);
      r.domain = run.at("ground_truth").at("domain").get<Domain>();
      r.label = verdict.at("label").get<Label>();
      if (report.contains("ttfv") && !report["ttfv"].is_null()) r.ttfv = report["ttfv"].get<double>();
      const auto usage = report.value("usage_total", TokenUsage{});
      r.input_tokens = usage.input_tokens;
      r.output_tokens = usage.output_tokens;
      const json cost = run.value("cost", json::object());
      r.cost_in = cost.value("input", 0.0);
      r.cost_out = cost.value("output", 0.0);
      r.wall_time = run.value("wall_time", 0.0);
    } catch (const json::exception& e) {
      throw ParseError(dir.string(), e.what());
    }
    r.attempts = static_cast<int>(read_jsonl_file(dir / kTraceFile).size());
    for (const auto& m : read_jsonl_file(dir / kMessagesFile)) {
      if (m.value("role", "") == "validator") ++r.validator_calls;
    }
    if (suite) {
      if (const auto* t = suite->find(r.target_id)) r.feature_bin = feature_bin(t->features);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void to_json(json& j, const RunRecord& r) {
  j = {{"run_id", r.run_id},
       {"architecture", r.architecture},
       {"model_family", r.model_family},
       {"target_id", r.target_id},
       {"domain", r.domain},
       {"mode", r.mode},
       {"label", r.label},
       {"cost_in", r.cost_in},
       {"cost_out", r.cost_out},
       {"input_tokens", r.input_tokens},
       {"output_tokens", r.output_tokens},
       {"wall_time", r.wall_time},
       {"attempts", r.attempts},
       {"validator_calls", r.validator_calls},
       {"feature_bin", r.feature_bin},
       {"stress", r.stress}};
  j["ttfv"] = r.ttfv ? json(*r.ttfv) : json(nullptr);
}

void from_json(const json& j, RunRecord& r) {
  r = RunRecord{};
  r.run_id = j.value("run_id", "");
  r.architecture = j.at("architecture").get<Architecture>();
  r.model_family = j.at("model_family").get<std::string>();
  r.target_id = j.at("target_id").get<std::string>();
  r.domain = j.at("domain").get<Domain>();
  r.mode = j.at("mode").get<Mode>();
  r.label = j.at("label").get<Label>();
  if (j.contains("ttfv") && !j["ttfv"].is_null()) r.ttfv = j["ttfv"].get<double>();
  r.cost_in = j.value("cost_in", 0.0);
  r.cost_out = j.value("cost_out", 0.0);
  r.input_tokens = j.value("input_tokens", std::uint64_t{0});
  r.output_tokens = j.value("output_tokens", std::uint64_t{0});
  r.wall_time = j.value("wall_time", 0.0);
  r.attempts = j.value("attempts", 0);
  r.validator_calls = j.value("validator_calls", 0);
  r.feature_bin = j.value("feature_bin", "");
  r.stress = j.value("stress", false);
  if (r.cost_in < 0 || r.cost_out < 0) throw ParseError(r.run_id, "negative cost");
}

namespace {

const std::vector<std::string> kCsvColumns = {
    "run_id",       "architecture", "model_family", "target_id", "domain",   "mode",
    "label",        "ttfv",         "cost_in",      "cost_out",  "input_tokens", "output_tokens",
    "wall_time",    "attempts",     "validator_calls", "feature_bin", "stress"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string json_scalar_text(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

void write_records(const fs::path& path, std::span<const RunRecord> records) {
  std::string out;
  if (path.extension() == ".csv") {
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out += (i ? "," : "") + kCsvColumns[i];
    out += '\n';
    for (const auto& r : records) {
      const json j = r;
      for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
        out += (i ? "," : "") + csv_field(json_scalar_text(j.at(kCsvColumns[i])));
      }
      out += '\n';
    }
  } else {
    out = json(std::vector<RunRecord>(records.begin(), records.end())).dump(2) + "\n";
  }
  write_file_atomic(path, out);
}

std::vector<RunRecord> read_records(const fs::path& path) {
  if (path.extension() != ".csv") {
    try {
      return read_json_file(path).get<std::vector<RunRecord>>();
    } catch (const json::exception& e) {
      throw ParseError(path.string(), e.what());
    }
  }
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = csv_split(line);
  std::vector<RunRecord> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = csv_split(line);
    if (cells.size() != header.size()) throw ParseError(path.string() + " line " + std::to_string(n), "column count");
    json j;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& h = header[i];
      const auto& c = cells[i];
      if (h == "ttfv") {
        j[h] = c.empty() ? json(nullptr) : json(std::stod(c));
      } else if (h == "cost_in" || h == "cost_out" || h == "wall_time") {
        j[h] = std::stod(c);
      } else if (h == "input_tokens" || h == "output_tokens") {
        j[h] = std::stoull(c);
      } else if (h == "attempts" || h == "validator_calls") {
        j[h] = std::stoi(c);
      } else if (h == "stress") {
        j[h] = c == "true";
      } else {
        j[h] = c;
      }
    }
    try {
      out.push_back(j.get<RunRecord>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + " line " + std::to_string(n), e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summaries

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::architecture: return "architecture";
    case Dimension::model_family: return "model_family";
    case Dimension::target_id: return "target_id";
    case Dimension::domain: return "domain";
    case Dimension::mode: return "mode";
    case Dimension::feature_bin: return "feature_bin";
  }
  return "architecture";
}

Dimension parse_dimension(std::string_view s) {
  for (auto d : {Dimension::architecture, Dimension::model_family, Dimension::target_id, Dimension::domain,
                 Dimension::mode, Dimension::feature_bin}) {
    if (to_string(d) == s) return d;
  }
  if (s == "model" || s == "family") return Dimension::model_family;
  if (s == "target") return Dimension::target_id;
  throw ConfigError("unknown group dimension '" + std::string(s) + "'");
}

std::string dimension_value(const RunRecord& r, Dimension d) {
  switch (d) {
    case Dimension::architecture: return std::string(to_string(r.architecture));
    case Dimension::model_family: return r.model_family;
    case Dimension::target_id: return r.target_id;
    case Dimension::domain: return std::string(to_string(r.domain));
    case Dimension::mode: return std::string(to_string(r.mode));
    case Dimension::feature_bin: return r.feature_bin;
  }
  return "";
}

namespace {

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

int enum_rank(const RunRecord& r, Dimension d) {
  switch (d) {
    case Dimension::architecture: return static_cast<int>(r.architecture);
    case Dimension::domain: return static_cast<int>(r.domain);
    case Dimension::mode: return static_cast<int>(r.mode);
    default: return 0;
  }
}

}  // namespace

MetricsSummary summarize_group(std::span<const RunRecord> records) {
  MetricsSummary s;
  s.n_runs = records.size();
  std::vector<double> ttfvs;
  double in_tokens = 0, out_tokens = 0, attempts = 0, vcalls = 0, wall = 0;
  for (const auto& r : records) {
    ++s.label_counts[static_cast<std::size_t>(r.label)];
    if (r.label == Label::tp && r.ttfv) ttfvs.push_back(*r.ttfv);
    s.cost_in_total += r.cost_in;
    s.cost_out_total += r.cost_out;
    in_tokens += static_cast<double>(r.input_tokens);
    out_tokens += static_cast<double>(r.output_tokens);
    attempts += r.attempts;
    vcalls += r.validator_calls;
    wall += r.wall_time;
  }
  if (s.n_runs == 0) return s;
  const double n = static_cast<double>(s.n_runs);
  const auto tp = s.count(Label::tp), fp = s.count(Label::fp);
  s.validated_rate = static_cast<double>(tp) / n;
  s.detect_any_rate = static_cast<double>(tp + s.count(Label::partial)) / n;
  s.fp_rate = static_cast<double>(fp) / n;
  if (tp + fp > 0) s.fp_rate_of_confirmed = static_cast<double>(fp) / static_cast<double>(tp + fp);
  s.median_ttfv = median(std::move(ttfvs));
  if (tp > 0) s.cost_per_validated = s.cost_total() / static_cast<double>(tp);
  s.mean_input_tokens = in_tokens / n;
  s.mean_output_tokens = out_tokens / n;
  s.mean_cost_in = s.cost_in_total / n;
  s.mean_cost_out = s.cost_out_total / n;
  s.mean_attempts = attempts / n;
  s.mean_validator_calls = vcalls / n;
  s.mean_wall_time = wall / n;
  return s;
}

std::vector<MetricsSummary> summarize(std::span<const RunRecord> records, std::span<const Dimension> group_by) {
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  auto key_less = [&](const RunRecord* a, const RunRecord* b) {
    for (auto d : group_by) {
      const int ra = enum_rank(*a, d), rb = enum_rank(*b, d);
      if (ra != rb) return ra < rb;
      const auto va = dimension_value(*a, d), vb = dimension_value(*b, d);
      if (va != vb) return natural_less(va, vb);
    }
    return false;
  };
  std::stable_sort(sorted.begin(), sorted.end(), key_less);

  std::vector<MetricsSummary> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && !key_less(sorted[i], sorted[j])) ++j;
    std::vector<RunRecord> group;
    for (std::size_t k = i; k < j; ++k) group.push_back(*sorted[k]);
    auto s = summarize_group(group);
    for (auto d : group_by) s.key.emplace_back(std::string(to_string(d)), dimension_value(*sorted[i], d));
    out.push_back(std::move(s));
    i = j;
  }
  if (group_by.empty() && out.empty()) out.push_back(summarize_group({}));
  return out;
}

// ---------------------------------------------------------------------------
// Bootstrap

bool RecordFilter::matches(const RunRecord& r) const {
  if (architecture && r.architecture != *architecture) return false;
  if (model_family && r.model_family != *model_family) return false;
  if (mode && r.mode != *mode) return false;
  if (domain && r.domain != *domain) return false;
  if (!include_stress && r.stress) return false;
  return true;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

BootstrapCI bootstrap_mean(std::span<const double> values, int resamples, std::uint64_t seed) {
  if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
  if (values.empty()) throw std::invalid_argument("bootstrap needs at least one target");
  BootstrapCI ci;
  ci.resamples = resamples;
  ci.seed = seed;
  ci.n_targets = values.size();
  ci.point = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());

  CounterRng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  const auto n = values.size();
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += values[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  ci.lo = percentile_sorted(means, 0.025);
  ci.hi = percentile_sorted(means, 0.975);
  return ci;
}

std::vector<std::pair<std::string, double>> target_rates(std::span<const RunRecord> records,
                                                         const RecordFilter& filter) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> per;  // tp, n
  for (const auto& r : records) {
    if (!filter.matches(r)) continue;
    auto& c = per[r.target_id];
    ++c.second;
    if (r.label == Label::tp) ++c.first;
  }
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [id, c] : per) out.emplace_back(id, static_cast<double>(c.first) / static_cast<double>(c.second));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return natural_less(a.first, b.first); });
  return out;
}

BootstrapCI bootstrap_ci(std::span<const RunRecord> records, const RecordFilter& filter, int resamples,
                         std::uint64_t seed) {
  if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
  std::vector<double> v;
  for (const auto& [id, rate] : target_rates(records, filter)) v.push_back(rate);
  return bootstrap_mean(v, resamples, seed);
}

BootstrapCI paired_delta(std::span<const RunRecord> records, Architecture a, Architecture b, Mode mode,
                         int resamples, std::uint64_t seed) {
  RecordFilter fa, fb;
  fa.architecture = a;
  fb.architecture = b;
  fa.mode = fb.mode = mode;
  const auto ra = target_rates(records, fa), rb = target_rates(records, fb);
  if (ra.size() != rb.size() ||
      !std::equal(ra.begin(), ra.end(), rb.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw ConfigError(fmt::format("target coverage mismatch between {} and {} in {}", to_string(a), to_string(b),
                                  to_string(mode)));
  }
  std::vector<double> deltas;
  for (std::size_t i = 0; i < ra.size(); ++i) deltas.push_back(ra[i].second - rb[i].second);
  auto ci = bootstrap_mean(deltas, resamples, seed);
  ci.unit = "target-level validated rate difference";
  return ci;
}

// ---------------------------------------------------------------------------
// Frontier

std::string FrontierPoint::label() const { return fmt::format("{}/{}", to_string(architecture), to_string(mode)); }

std::vector<FrontierPoint> frontier_points(std::span<const RunRecord> records, int resamples, std::uint64_t seed) {
  std::vector<FrontierPoint> out;
  for (auto m : kAllModes) {
    for (auto a : kAllArchitectures) {
      RecordFilter f;
      f.architecture = a;
      f.mode = m;
      std::vector<RunRecord> cell;
      for (const auto& r : records) {
        if (f.matches(r)) cell.push_back(r);
      }
      if (cell.empty()) continue;
      const auto s = summarize_group(cell);
      FrontierPoint p;
      p.architecture = a;
      p.mode = m;
      p.x = s.cost_per_validated;
      p.y = s.validated_rate;
      p.ci = bootstrap_ci(cell, f, resamples, seed);
      out.push_back(p);
    }
  }
  const auto front = pareto_frontier(out);
  for (auto& p : out) {
    p.on_frontier = std::any_of(front.begin(), front.end(), [&](const FrontierPoint& q) {
      return q.architecture == p.architecture && q.mode == p.mode;
    });
  }
  return out;
}

std::vector<FrontierPoint> pareto_frontier(std::span<const FrontierPoint> points) {
  std::vector<FrontierPoint> defined;
  for (const auto& p : points) {
    if (p.x) defined.push_back(p);
  }
  // Sort by cost ascending, rate descending; a point survives iff its rate
  // beats every strictly cheaper point and ties the best at its own cost.
  std::stable_sort(defined.begin(), defined.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
    if (*a.x != *b.x) return *a.x < *b.x;
    return a.y > b.y;
  });
  std::vector<FrontierPoint> out;
  double best_cheaper = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < defined.size()) {
    std::size_t j = i;
    const double top = defined[i].y;
    while (j < defined.size() && *defined[j].x == *defined[i].x) {
      if (defined[j].y == top && top > best_cheaper) {
        auto p = defined[j];
        p.on_frontier = true;
        out.push_back(p);
      }
      ++j;
    }
    best_cheaper = std::max(best_cheaper, top);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Routing

RouteDecision route(std::span<const ArchEstimate> estimates, double lambda) {
  if (lambda < 0) throw ConfigError("lambda must be non-negative");
  if (estimates.empty()) throw ConfigError("no routing estimates");
  RouteDecision d;
  std::size_t best = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    d.utilities.push_back(estimates[i].s_hat - lambda * estimates[i].c_hat);
    if (i == 0) continue;
    const auto& e = estimates[i];
    const auto& b = estimates[best];
    const double ue = d.utilities[i], ub = d.utilities[best];
    if (ue > ub || (ue == ub && (e.c_hat < b.c_hat ||
                                 (e.c_hat == b.c_hat && to_string(e.architecture) < to_string(b.architecture))))) {
      best = i;
    }
  }
  d.architecture = estimates[best].architecture;
  return d;
}

std::string_view to_string(CellFlag f) {
  switch (f) {
    case CellFlag::ok: return "ok";
    case CellFlag::single_run: return "single_run";
    case CellFlag::missing: return "missing";
  }
  return "ok";
}

std::string context_of(const RunRecord& r, const ContextKeys& keys) {
  std::vector<std::string> parts;
  if (keys.domain) parts.push_back(fmt::format("domain={}", to_string(r.domain)));
  if (keys.mode) parts.push_back(fmt::format("mode={}", to_string(r.mode)));
  if (keys.feature_bin) parts.push_back(fmt::format("features={}", r.feature_bin));
  return fmt::format("{}", fmt::join(parts, ","));
}

std::vector<RoutingEstimate> fit_estimates(std::span<const RunRecord> records, const ContextKeys& keys, double lambda) {
  std::vector<std::string> contexts;
  std::map<std::pair<int, std::string>, std::vector<const RunRecord*>> cells;
  for (const auto& r : records) {
    const auto ctx = context_of(r, keys);
    if (std::find(contexts.begin(), contexts.end(), ctx) == contexts.end()) contexts.push_back(ctx);
    cells[{static_cast<int>(r.architecture), ctx}].push_back(&r);
  }
  std::sort(contexts.begin(), contexts.end(), [](const auto& a, const auto& b) { return natural_less(a, b); });
  std::vector<RoutingEstimate> out;
  for (const auto& ctx : contexts) {
    for (auto a : kAllArchitectures) {
      RoutingEstimate e;
      e.architecture = a;
      e.context = ctx;
      e.lambda = lambda;
      const auto it = cells.find({static_cast<int>(a), ctx});
      if (it == cells.end()) {
        e.flag = CellFlag::missing;
      } else {
        const auto& rs = it->second;
        e.n = rs.size();
        double tp = 0, cost = 0;
        for (const auto* r : rs) {
          tp += r->label == Label::tp ? 1 : 0;
          cost += r->cost();
        }
        e.s_hat = tp / static_cast<double>(e.n);
        e.c_hat = cost / static_cast<double>(e.n);
        e.flag = e.n == 1 ? CellFlag::single_run : CellFlag::ok;
      }
      e.u_hat = e.s_hat - lambda * e.c_hat;
      out.push_back(e);
    }
  }
  return out;
}

std::vector<std::pair<std::string, RouteDecision>> route_table(std::span<const RoutingEstimate> estimates,
                                                               double lambda) {
  std::vector<std::pair<std::string, RouteDecision>> out;
  std::vector<std::string> contexts;
  for (const auto& e : estimates) {
    if (std::find(contexts.begin(), contexts.end(), e.context) == contexts.end()) contexts.push_back(e.context);
  }
  for (const auto& ctx : contexts) {
    std::vector<ArchEstimate> cell;
    for (const auto& e : estimates) {
      if (e.context == ctx && e.flag != CellFlag::missing) cell.push_back({e.architecture, e.s_hat, e.c_hat});
    }
    if (!cell.empty()) out.emplace_back(ctx, route(cell, lambda));
  }
  return out;
}

void to_json(json& j, const BootstrapCI& c) {
  j = {{"point", c.point}, {"lo", c.lo},           {"hi", c.hi},   {"resamples", c.resamples},
       {"seed", c.seed},   {"n_targets", c.n_targets}, {"unit", c.unit}};
}

}  // namespace topobench
