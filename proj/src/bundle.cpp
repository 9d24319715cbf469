#include "topobench/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "topobench/error.hpp"

namespace topobench {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& canonical_bundle_files() {
  static const std::vector<std::string> files = {kRunFile,      kFindingsFile, kTraceFile, kActivityFile,
                                                 kMessagesFile, kLogFile,      kVerdictFile};
  return files;
}

void to_json(json& j, const RunBudgetSpec& b) {
  j = {{"outer_timeout_s", b.outer_timeout_s}, {"tool_cap_s", b.tool_cap_s}};
  j["max_cost"] = b.max_cost ? json(*b.max_cost) : json(nullptr);
}

void from_json(const json& j, RunBudgetSpec& b) {
  b.outer_timeout_s = j.value("outer_timeout_s", 1800.0);
  b.tool_cap_s = j.value("tool_cap_s", 300.0);
  b.max_cost.reset();
  if (j.contains("max_cost") && !j["max_cost"].is_null()) b.max_cost = j["max_cost"].get<double>();
}

void to_json(json& j, const RunSpec& s) {
  j = {{"run_id", s.run_id},
       {"campaign_id", s.campaign_id},
       {"architecture", s.architecture},
       {"model_family", s.model_family},
       {"target_id", s.target_id},
       {"mode", s.mode},
       {"budget", s.budget},
       {"seed", s.seed},
       {"stress", s.stress}};
}

void from_json(const json& j, RunSpec& s) {
  s.run_id = j.at("run_id").get<std::string>();
  s.campaign_id = j.value("campaign_id", "");
  s.architecture = j.at("architecture").get<Architecture>();
  s.model_family = j.at("model_family").get<std::string>();
  s.target_id = j.at("target_id").get<std::string>();
  s.mode = j.at("mode").get<Mode>();
  s.budget = j.value("budget", RunBudgetSpec{});
  s.seed = j.value("seed", std::uint64_t{0});
  s.stress = j.value("stress", false);
}

void to_json(json& j, const ActivityEvent& e) { j = {{"t", e.t}, {"event", e.event}, {"detail", e.detail}}; }

void from_json(const json& j, ActivityEvent& e) {
  e.t = j.at("t").get<double>();
  e.event = j.at("event").get<std::string>();
  e.detail = j.value("detail", "");
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l.dump();
    out += '\n';
  }
  return out;
}

json run_document(const BundleData& d, bool finished) {
  json j = {{"state", finished ? "finished" : "running"},
            {"spec", d.spec},
            {"ground_truth", d.truth},
            {"wall_anchor", d.wall_anchor}};
  if (finished) {
    json report = d.report;
    report.erase("attempts");
    report.erase("emitted");
    j["report"] = std::move(report);
    j["termination"] = d.termination;
    j["cost"] = d.cost;
    j["wall_time"] = d.report.wall_time;
  }
  return j;
}

}  // namespace

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.filename().string(), e.what());
  }
}

std::vector<json> read_jsonl_file(const fs::path& path) {
  std::vector<json> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(path.filename().string() + " line " + std::to_string(n), e.what());
    }
  }
  return out;
}

void write_run_header(const fs::path& dir, const RunSpec& spec, const GroundTruth& truth,
                      const std::string& wall_anchor) {
  BundleData d;
  d.spec = spec;
  d.truth = truth;
  d.wall_anchor = wall_anchor;
  write_file_atomic(dir / kRunFile, run_document(d, false).dump(2) + "\n");
}

void write_bundle(const fs::path& dir, const BundleData& d) {
  if (fs::exists(dir / kVerdictFile)) throw Error("bundle already finalized: " + dir.string());
  fs::create_directories(dir / "logs");
  if (!fs::exists(dir / kRunFile)) write_run_header(dir, d.spec, d.truth, d.wall_anchor);

  std::vector<json> findings, trace, activity, messages;
  for (std::size_t i = 0; i < d.report.emitted.size(); ++i) {
    findings.push_back({{"seq", i}, {"source", d.report.emitted[i].source}, {"claim", d.report.emitted[i].claim}});
  }
  for (std::size_t i = 0; i < d.report.attempts.size(); ++i) {
    trace.push_back({{"seq", i}, {"attempt", d.report.attempts[i]}});
  }
  for (const auto& e : d.activity) activity.push_back(e);
  for (const auto& m : d.report.invocations) messages.push_back(m);

  write_file_atomic(dir / kFindingsFile, jsonl(findings));
  write_file_atomic(dir / kTraceFile, jsonl(trace));
  write_file_atomic(dir / kActivityFile, jsonl(activity));
  write_file_atomic(dir / kMessagesFile, jsonl(messages));
  write_file_atomic(dir / kLogFile, d.log);
  for (const auto& [name, content] : d.evidence) {
    write_file_atomic(dir / "evidence" / fs::path(name).filename(), content);
  }
  write_file_atomic(dir / kRunFile, run_document(d, true).dump(2) + "\n");
  write_file_atomic(dir / kVerdictFile, json(d.verdict).dump(2) + "\n");
}

BundleData load_bundle(const fs::path& dir) {
  for (const auto& name : canonical_bundle_files()) {
    if (!fs::is_regular_file(dir / name)) {
      throw IncompleteBundle(name, "incomplete bundle " + dir.string() + ": missing " + name);
    }
  }
  const json run = read_json_file(dir / kRunFile);
  if (run.value("state", "") != "finished") throw IncompleteBundle(kRunFile, "run.json was never finalized");

  BundleData d;
  try {
    d.spec = run.at("spec").get<RunSpec>();
    d.truth = run.at("ground_truth").get<GroundTruth>();
    d.wall_anchor = run.value("wall_anchor", "");
    d.termination = run.value("termination", "normal");
    d.cost = run.value("cost", Cost{});

    json report = run.at("report");
    report["attempts"] = json::array();
    for (const auto& l : read_jsonl_file(dir / kTraceFile)) report["attempts"].push_back(l.at("attempt"));
    report["emitted"] = json::array();
    for (const auto& l : read_jsonl_file(dir / kFindingsFile)) {
      report["emitted"].push_back({{"source", l.at("source")}, {"claim", l.at("claim")}});
    }
    d.report = report.get<RunReport>();
    for (const auto& l : read_jsonl_file(dir / kMessagesFile)) d.report.invocations.push_back(l.get<InvocationRecord>());
    for (const auto& l : read_jsonl_file(dir / kActivityFile)) d.activity.push_back(l.get<ActivityEvent>());
    d.verdict = read_json_file(dir / kVerdictFile).get<Verdict>();
  } catch (const json::exception& e) {
    throw ParseError(dir.string(), e.what());
  }
  d.log = read_text(dir / kLogFile);
  if (fs::is_directory(dir / "evidence")) {
    for (const auto& entry : fs::directory_iterator(dir / "evidence")) {
      if (entry.is_regular_file()) d.evidence[entry.path().filename().string()] = read_text(entry.path());
    }
  }
  return d;
}

std::vector<fs::path> list_bundles(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / kRunFile)) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace topobench
