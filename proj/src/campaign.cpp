#include "topobench/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "topobench/backends.hpp"
#include "topobench/endpoint.hpp"
#include "topobench/error.hpp"
#include "topobench/net.hpp"
#include "topobench/rng.hpp"
#include "topobench/tool.hpp"
#include "topobench/verifier.hpp"

namespace topobench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string make_run_id(const std::string& campaign_id, Architecture a, const std::string& family,
                        const std::string& target_id, Mode m, std::uint64_t seed) {
  const auto h = fnv1a64(fmt::format("{}\x1f{}\x1f{}\x1f{}\x1f{}\x1f{}", campaign_id, to_string(a), family,
                                     target_id, to_string(m), seed));
  return fmt::format("{}_{}_{}_{}_{:08x}", to_string(a), family, target_id, to_string(m), h & 0xffffffffu);
}

std::vector<RunSpec> build_matrix(const MatrixConfig& c) {
  if (c.suite == nullptr) throw ConfigError("build_matrix: no suite");
  if (c.architectures.empty()) throw ConfigError("build_matrix: no architectures");
  if (c.model_families.empty()) throw ConfigError("build_matrix: no model families");
  if (c.modes.empty()) throw ConfigError("build_matrix: no modes");
  if (c.suite->core_targets.empty()) throw ConfigError("build_matrix: no targets");
  if (c.include_stress && c.suite->stress_targets.empty()) throw ConfigError("build_matrix: no stress targets");

  std::vector<RunSpec> out;
  auto emit = [&](const std::vector<TargetSpec>& targets) {
    for (auto a : c.architectures) {
      for (const auto& fam : c.model_families) {
        for (const auto& t : targets) {
          for (auto m : c.modes) {
            RunSpec s;
            s.campaign_id = c.campaign_id;
            s.architecture = a;
            s.model_family = fam;
            s.target_id = t.id;
            s.mode = m;
            s.budget = c.budget;
            s.seed = c.seed;
            s.stress = t.stress;
            s.run_id = make_run_id(c.campaign_id, a, fam, t.id, m, c.seed);
            out.push_back(std::move(s));
          }
        }
      }
    }
  };
  emit(c.suite->core_targets);
  if (c.include_stress) emit(c.suite->stress_targets);
  return out;
}

// ---------------------------------------------------------------------------
// Target reset

namespace {

bool is_url(const std::string& hook) {
  return hook.rfind("http://", 0) == 0 || hook.rfind("https://", 0) == 0 || hook.rfind("tcp://", 0) == 0;
}

bool run_hook(const std::string& hook, bool reset, std::chrono::milliseconds timeout, std::string& message) {
  if (!is_url(hook)) {
    try {
      const auto r = execute_tool(hook, std::min(60.0, kMaxToolCapSeconds));
      message = fmt::format("hook exit {}", r.exit_status);
      return r.status == ToolStatus::exited && r.exit_status == 0;
    } catch (const Error& e) {
      message = e.what();
      return false;
    }
  }
  const auto ep = parse_endpoint(hook);
  if (!ep) {
    message = "unparsable hook " + hook;
    return false;
  }
  if (ep->scheme == "tcp") {
    if (!reset) return net::tcp_can_connect(ep->host, ep->port, timeout);
    const auto line = net::tcp_exchange_line(ep->host, ep->port, "RESET", timeout);
    message = line.value_or("no answer");
    return line && *line == "OK";
  }
  httplib::Client client(ep->origin());
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  const auto res = reset ? client.Post(ep->path, "", "text/plain") : client.Get(ep->path);
  if (!res) {
    message = httplib::to_string(res.error());
    return false;
  }
  message = fmt::format("HTTP {}", res->status);
  return res->status >= 200 && res->status < 300;
}

}  // namespace

HealthStatus reset_target(const TargetSpec& target, const ResetOptions& options) {
  const auto start = Clock::now();
  HealthStatus st;
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  if (target.reset_hook && !run_hook(*target.reset_hook, true, options.probe_timeout, st.message)) {
    st.message = "reset failed: " + st.message;
    st.elapsed = elapsed();
    return st;
  }
  std::string health = target.health_hook.value_or("");
  if (health.empty()) {
    const auto ep = parse_endpoint(target.blackbox_endpoint);
    health = ep ? "tcp://" + ep->host + ":" + std::to_string(ep->port) : target.blackbox_endpoint;
  }
  for (int i = 0; i < std::max(1, options.health_retries); ++i) {
    ++st.probes;
    if (run_hook(health, false, options.probe_timeout, st.message)) {
      st.ok = true;
      st.message = "healthy";
      break;
    }
    if (i + 1 < options.health_retries) std::this_thread::sleep_for(options.retry_interval);
  }
  if (!st.ok) st.message = fmt::format("unhealthy after {} probes ({})", st.probes, st.message);
  st.elapsed = elapsed();
  return st;
}

// ---------------------------------------------------------------------------
// Backends

void BackendRegistry::add_family(const std::string& family, FamilyBackends backends) {
  if (!backends.model) throw ConfigError("family " + family + " has no model backend");
  families_[family] = std::move(backends);
}

EngineAgents BackendRegistry::agents_for(const std::string& family) const {
  const auto it = families_.find(family);
  if (it == families_.end()) throw ConfigError("no backend registered for model family " + family);
  EngineAgents a;
  a.scanner = it->second.model;
  a.planner = it->second.model;
  a.specialist = it->second.model;
  a.validator = it->second.validator ? it->second.validator
                : default_validator_ ? default_validator_
                                     : it->second.model;
  return a;
}

std::vector<std::string> BackendRegistry::families() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : families_) out.push_back(k);
  return out;
}

// ---------------------------------------------------------------------------
// Run execution

namespace {

struct EngineJob {
  EngineJob(EngineContext c, double timeout, double tool_cap, std::optional<double> max_cost, RunBudget::CostFn fn)
      : ctx(std::move(c)), budget(timeout, tool_cap, max_cost, std::move(fn)) {}

  EngineContext ctx;
  RunBudget budget;
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  std::optional<RunReport> report;
  std::string error;
};

class RunLog {
 public:
  RunLog() : start_(Clock::now()) {}
  double now() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  void event(std::string name, std::string detail = {}) {
    const double t = now();
    log += fmt::format("[{:9.3f}] {} {}\n", t, name, detail);
    activity.push_back({t, std::move(name), std::move(detail)});
  }

  std::vector<ActivityEvent> activity;
  std::string log;

 private:
  Clock::time_point start_;
};

RunReport infra_only(const RunSpec& spec, std::string error) {
  RunReport r;
  r.run_id = spec.run_id;
  r.architecture = spec.architecture;
  r.status = RunStatus::infra_error;
  r.error = std::move(error);
  return r;
}

GroundTruth truth_for(const RunSpec& spec, const TargetSpec* target) {
  GroundTruth g;
  g.target_id = spec.target_id;
  g.mode = spec.mode;
  if (target) {
    g.primary_cwe = target->primary_cwe;
    g.domain = target->domain;
  }
  return g;
}

}  // namespace

fs::path execute_run(const RunSpec& spec, const TargetSpec& target, const BackendRegistry& backends,
                     const CampaignOptions& options) {
  const fs::path dir = options.out_dir / spec.run_id;
  if (fs::exists(dir / kVerdictFile)) {
    if (options.resume) return dir;
    fs::remove_all(dir);
  } else if (fs::exists(dir)) {
    fs::remove_all(dir);  // incomplete bundle from an interrupted campaign
  }

  RunLog log;
  BundleData data;
  data.spec = spec;
  data.truth = truth_for(spec, &target);
  data.wall_anchor = utc_timestamp();
  write_run_header(dir, spec, data.truth, data.wall_anchor);
  log.event("run_start", spec.run_id);

  try {
    const auto health = reset_target(target, options.reset);
    log.event("reset", health.message);
    if (!health.ok) {
      data.report = infra_only(spec, "target unhealthy: " + health.message);
    } else {
      EngineContext ctx;
      ctx.run_id = spec.run_id;
      ctx.target = resolve_mode_context(target, spec.mode);
      ctx.prompts = render_prompts(options.templates, spec.mode, ctx.target);
      ctx.agents = backends.agents_for(spec.model_family);
      ctx.options = options.engine;
      ctx.options.seed = spec.seed;

      const std::string family = spec.model_family;
      const PriceTable prices = options.prices;
      auto job = std::make_shared<EngineJob>(std::move(ctx), spec.budget.outer_timeout_s, spec.budget.tool_cap_s,
                                             spec.budget.max_cost, [family, prices](const TokenUsage& u) {
                                               return account_usage(u, family, prices).total();
                                             });
      log.event("engine_start", std::string(to_string(spec.architecture)));
      std::thread worker([job, arch = spec.architecture] {
        std::optional<RunReport> report;
        std::string error;
        try {
          report = run_engine(arch, job->ctx, job->budget);
        } catch (const std::exception& e) {
          error = e.what();
        }
        std::lock_guard lock(job->mu);
        job->report = std::move(report);
        job->error = std::move(error);
        job->done = true;
        job->cv.notify_all();
      });

      std::unique_lock lock(job->mu);
      bool finished = job->cv.wait_until(lock, job->budget.deadline(), [&] { return job->done; });
      if (!finished) {
        job->budget.request_stop();
        log.event("graceful_stop", fmt::format("grace {:.1f}s", options.grace_s));
        data.termination = "graceful_stop";
        finished = job->cv.wait_for(lock, std::chrono::duration<double>(options.grace_s), [&] { return job->done; });
      }
      if (finished) {
        lock.unlock();
        worker.join();
        if (job->report) {
          data.report = std::move(*job->report);
        } else {
          data.report = infra_only(spec, "engine failed: " + job->error);
        }
      } else {
        // In-process threads cannot be killed; the engine is abandoned and
        // will find its stop token set at its next agent call.
        lock.unlock();
        worker.detach();
        data.termination = "hard_kill";
        log.event("hard_kill");
        data.report = infra_only(spec, "run did not stop within the grace period");
        data.report.usage_total = job->budget.spent();
      }
      if (data.report.status != RunStatus::infra_error && job->budget.expired()) {
        data.report.status = RunStatus::infra_error;
        data.report.selected.reset();
        data.report.validated = false;
        data.report.error = fmt::format("outer timeout of {:.0f}s exceeded", spec.budget.outer_timeout_s);
      }
      if (data.report.status == RunStatus::infra_error && data.report.error.empty() && job->budget.expired()) {
        data.report.error = fmt::format("outer timeout of {:.0f}s exceeded", spec.budget.outer_timeout_s);
      }
      log.event("engine_end", fmt::format("{} validated={}", to_string(data.report.status), data.report.validated));
    }
  } catch (const std::exception& e) {
    data.report = infra_only(spec, std::string("run setup failed: ") + e.what());
    log.event("error", e.what());
  }
  data.report.run_id = spec.run_id;
  data.report.architecture = spec.architecture;

  try {
    data.verdict = adjudicate(data.report, data.truth);
  } catch (const MalformedReport& e) {
    data.report = infra_only(spec, std::string("malformed report: ") + e.what());
    data.verdict = adjudicate(data.report, data.truth);
  }
  try {
    data.cost = account_usage(data.report.usage_total, spec.model_family, options.prices);
  } catch (const ConfigError& e) {
    log.event("cost_unavailable", e.what());
  }
  for (std::size_t i = 0; i < data.report.attempts.size(); ++i) {
    const auto& a = data.report.attempts[i];
    if (a.verdict == AttemptVerdict::confirmed) {
      data.evidence[fmt::format("attempt-{}.txt", i)] = a.claim.cwe + "\n" + a.evidence + "\n";
    }
  }
  log.event("adjudicated", std::string(to_string(data.verdict.label)));
  data.activity = std::move(log.activity);
  data.log = std::move(log.log);
  write_bundle(dir, data);
  return dir;
}

namespace {

fs::path persist_crash(const RunSpec& spec, const TargetSpec* target, const CampaignOptions& options,
                       const std::string& error) {
  const fs::path dir = options.out_dir / spec.run_id;
  fs::remove_all(dir);
  BundleData d;
  d.spec = spec;
  d.truth = truth_for(spec, target);
  d.wall_anchor = utc_timestamp();
  d.report = infra_only(spec, error);
  d.verdict = adjudicate(d.report, d.truth);
  d.activity.push_back({0.0, "error", error});
  d.log = "run crashed: " + error + "\n";
  write_bundle(dir, d);
  return dir;
}

}  // namespace

CampaignResult execute_campaign(const std::vector<RunSpec>& specs, const SuiteManifest& suite,
                                const BackendRegistry& backends, const CampaignOptions& options) {
  if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  fs::create_directories(options.out_dir);

  CampaignResult result;
  result.bundles.resize(specs.size());
  std::vector<char> persisted(specs.size(), 0);
  std::mutex mu;
  std::ofstream activity(options.out_dir / "campaign_activity.jsonl", std::ios::app);
  const auto start = Clock::now();
  std::atomic<std::size_t> next{0};
  int in_flight = 0;

  auto note = [&](const char* event, const RunSpec& s, int worker, int flight) {
    const double t = std::chrono::duration<double>(Clock::now() - start).count();
    activity << json{{"t", t}, {"event", event}, {"run_id", s.run_id}, {"worker", worker}, {"in_flight", flight}}.dump()
             << '\n';
    activity.flush();
  };

  auto work = [&](int worker) {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      const RunSpec& s = specs[i];
      {
        std::lock_guard lock(mu);
        ++in_flight;
        result.peak_concurrency = std::max(result.peak_concurrency, in_flight);
        note("run_start", s, worker, in_flight);
      }
      const TargetSpec* target = suite.find(s.target_id);
      fs::path dir;
      try {
        if (!target) throw ConfigError("unknown target " + s.target_id);
        dir = execute_run(s, *target, backends, options);
      } catch (const std::exception& e) {
        try {
          dir = persist_crash(s, target, options, e.what());
        } catch (...) {
        }
      }
      std::optional<Verdict> verdict;
      try {
        if (!dir.empty()) verdict = read_json_file(dir / kVerdictFile).get<Verdict>();
      } catch (...) {
      }
      std::lock_guard lock(mu);
      --in_flight;
      note("run_end", s, worker, in_flight);
      result.bundles[i] = dir;
      persisted[i] = verdict.has_value();
      if (verdict && verdict->label == Label::infra_error) ++result.infra_errors;
      if (verdict && options.on_run_finished) options.on_run_finished(s, *verdict);
    }
  };

  const int n = std::min<int>(options.parallelism, static_cast<int>(std::max<std::size_t>(specs.size(), 1)));
  std::vector<std::jthread> pool;
  for (int w = 0; w < n; ++w) pool.emplace_back(work, w);
  pool.clear();
  result.all_persisted = std::all_of(persisted.begin(), persisted.end(), [](char c) { return c != 0; });
  return result;
}

CampaignResult rerun_infra_errors(const SuiteManifest& suite, const BackendRegistry& backends,
                                  const CampaignOptions& options) {
  std::vector<RunSpec> specs;
  for (const auto& dir : list_bundles(options.out_dir)) {
    try {
      const json run = read_json_file(dir / kRunFile);
      bool again = !fs::exists(dir / kVerdictFile);
      if (!again) again = read_json_file(dir / kVerdictFile).at("label").get<Label>() == Label::infra_error;
      if (!again) continue;
      specs.push_back(run.at("spec").get<RunSpec>());
      fs::remove_all(dir);
    } catch (const std::exception&) {
      // Bundles whose run.json is unreadable cannot be re-executed.
    }
  }
  return execute_campaign(specs, suite, backends, options);
}

// ---------------------------------------------------------------------------
// Configuration

CampaignConfig load_campaign_config(const fs::path& path) {
  const json j = read_json_file(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  CampaignConfig c;
  try {
    c.campaign_id = j.value("campaign_id", "campaign");
    if (j.contains("suite")) c.suite_path = resolve(j.at("suite").get<std::string>());
    if (j.contains("architectures")) {
      c.architectures.clear();
      for (const auto& a : j.at("architectures")) c.architectures.push_back(parse_architecture(a.get<std::string>()));
    }
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
    }
    for (const auto& f : j.at("model_families")) {
      const auto name = f.at("name").get<std::string>();
      if (c.family_backends.count(name)) throw ConfigError("duplicate model family " + name);
      c.family_names.push_back(name);
      c.family_backends[name] = f.value("backend", json::object());
    }
    if (j.contains("validator")) c.validator = j.at("validator");
    c.include_stress = j.value("include_stress", false);
    c.mock_targets = j.value("mock_targets", false);
    c.budget = j.value("budget", RunBudgetSpec{});
    c.seed = j.value("seed", std::uint64_t{0});
    c.parallelism = j.value("parallelism", 2);
    if (j.contains("prices")) c.prices_path = resolve(j.at("prices").get<std::string>());
    if (j.contains("templates")) c.templates_path = resolve(j.at("templates").get<std::string>());
    c.hybrid_recheck = j.value("hybrid_recheck", true);
    c.max_tool_turns = j.value("max_tool_turns", 8);
    c.grace_s = j.value("grace_s", 30.0);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (c.budget.tool_cap_s <= 0 || c.budget.tool_cap_s > kMaxToolCapSeconds) {
    throw ConfigError(fmt::format("tool_cap_s must be in (0, {}]", kMaxToolCapSeconds));
  }
  if (c.budget.outer_timeout_s <= 0) throw ConfigError("outer_timeout_s must be positive");
  return c;
}

namespace {

std::shared_ptr<AgentBackend> make_backend(const std::string& name, const json& d,
                                           const std::vector<SimulatedTarget>& simulated, std::uint64_t seed) {
  const std::string kind = d.value("type", "stochastic");
  if (kind == "remote") {
    RemoteConfig rc;
    rc.identity = name;
    rc.base_url = d.at("base_url").get<std::string>();
    rc.path = d.value("path", rc.path);
    rc.model = d.at("model").get<std::string>();
    rc.api_key_env = d.value("api_key_env", "");
    rc.max_retries = d.value("max_retries", rc.max_retries);
    rc.initial_backoff_s = d.value("initial_backoff_s", rc.initial_backoff_s);
    rc.request_timeout_s = d.value("request_timeout_s", rc.request_timeout_s);
    rc.pass_through = d.value("pass_through", json::object());
    return std::make_shared<RemoteBackend>(rc);
  }
  if (kind == "stochastic") {
    StochasticConfig sc;
    sc.identity = name;
    sc.p_white = d.value("p_white", sc.p_white);
    sc.p_black = d.value("p_black", sc.p_black);
    sc.p_validate = d.value("p_validate", sc.p_validate);
    if (d.contains("decoy_cwes")) sc.decoy_cwes = d.at("decoy_cwes").get<std::vector<std::string>>();
    if (d.contains("base_usage")) sc.base_usage = d.at("base_usage").get<TokenUsage>();
    sc.seed = d.value("seed", seed);
    sc.targets = simulated;
    return std::make_shared<StochasticBackend>(sc);
  }
  if (kind == "replay") {
    return std::make_shared<ReplayValidatorBackend>(d.value("marker", std::string("IMPACT:")),
                                                    d.value("timeout_s", 5.0));
  }
  if (kind == "scripted") return std::make_shared<ScriptedBackend>(name);
  throw ConfigError("unknown backend type '" + kind + "' for " + name);
}

}  // namespace

BackendRegistry build_registry(const CampaignConfig& config, const std::vector<SimulatedTarget>& simulated) {
  BackendRegistry reg;
  try {
    for (const auto& name : config.family_names) {
      reg.add_family(name, {make_backend(name, config.family_backends.at(name), simulated, config.seed), nullptr});
    }
    if (config.validator) reg.set_default_validator(make_backend("validator", *config.validator, simulated, config.seed));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend configuration: ") + e.what());
  }
  return reg;
}

}  // namespace topobench
