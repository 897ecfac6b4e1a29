#include "geosim/cli/runner.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

#include "geosim/ror/rcp_example.h"
#include "geosim/txn/listing1.h"

namespace geosim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr size_t kViolationsListed = 20;

json TsJson(const Timestamp& t) {
  return json{{"value", t.value}, {"err", t.err}, {"mode", TsModeName(t.mode)},
              {"coordinator", t.coordinator}, {"local_seq", t.local_seq}};
}

std::string Hex(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json MetricsJson(const MetricsReport& m) {
  return json{{"duration_s", m.duration_s},
              {"committed", m.committed},
              {"aborted", m.aborted},
              {"queries", m.queries},
              {"replica_queries", m.replica_queries},
              {"throughput_per_s", m.throughput_per_s},
              {"txn_throughput_per_s", m.txn_throughput_per_s},
              {"query_throughput_per_s", m.query_throughput_per_s},
              {"p50_latency_us", m.p50_latency_us},
              {"p99_latency_us", m.p99_latency_us},
              {"abort_rate", m.abort_rate},
              {"replica_read_share", m.replica_read_share},
              {"rcp_publications", m.rcp_publications},
              {"mode_changes", m.mode_changes},
              {"abort_reasons", m.abort_reasons},
              {"phase_mean_us", m.phase_mean_us}};
}

json ChecksJson(const CheckReport& checks) {
  json out = json::object();
  for (const auto& [name, list] : checks.by_checker) {
    json first = json::array();
    for (size_t i = 0; i < list.size() && i < kViolationsListed; ++i) {
      const Violation& v = list[i];
      first.push_back(json{{"txn", v.txn}, {"other_txn", v.other_txn}, {"at", v.at},
                           {"description", v.description}});
    }
    out[name] = json{{"violations", list.size()}, {"first", first}};
  }
  return out;
}

std::string FormatValue(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Flattens scalar leaves of a report into "a.b,value" rows.
void FlattenCsv(const json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) FlattenCsv(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    out << prefix << ".count," << j.size() << "\n";
  } else if (j.is_string()) {
    out << prefix << "," << j.get<std::string>() << "\n";
  } else {
    out << prefix << "," << j.dump() << "\n";
  }
}

ScenarioOutcome ExecuteCluster(const ScenarioConfig& config, History* history_out) {
  Cluster cluster(config.cluster);
  RunResult result = cluster.Run();
  ScenarioOutcome out;
  out.report = ClusterReport(config, result);
  out.metrics = result.metrics;
  out.violations = result.checks.total() + result.clock_envelope_violations;
  out.exit_code = out.violations > 0 ? kExitViolations : kExitClean;
  std::ostringstream s;
  s << config.cluster.name << " seed=" << config.cluster.seed
    << " committed=" << result.metrics.committed << " queries=" << result.metrics.queries
    << " throughput=" << result.metrics.throughput_per_s << "/s"
    << " violations=" << out.violations;
  out.summary = s.str();
  if (history_out) *history_out = std::move(result.history);
  return out;
}

ScenarioOutcome ExecuteListing1(const ScenarioConfig& config) {
  const uint64_t base = config.cluster.seed;
  uint32_t anomalies = 0;
  uint32_t applicable = 0;
  std::optional<AnomalyReport> first;
  std::optional<uint64_t> first_seed;
  for (uint32_t i = 0; i < config.listing1_runs; ++i) {
    AnomalyReport r = RunListing1Scenario(config.listing1, base + i);
    if (r.applicable) ++applicable;
    if (r.anomaly) {
      ++anomalies;
      if (!first) {
        first = r;
        first_seed = base + i;
      }
    }
  }
  ScenarioOutcome out;
  out.violations = anomalies;
  out.exit_code = anomalies > 0 ? kExitViolations : kExitClean;
  json rep{{"schema_version", kReportSchemaVersion},
           {"kind", ScenarioKindName(config.kind)},
           {"scenario", config.cluster.name},
           {"seed", base},
           {"runs", config.listing1_runs},
           {"applicable_runs", applicable},
           {"anomalies", anomalies},
           {"enable_wait", config.listing1.enable_wait},
           {"initial_mode", TsModeName(config.listing1.initial_mode)},
           {"verdict", anomalies > 0 ? "violations" : "clean"}};
  if (first) {
    rep["first_anomaly"] = json{{"seed", *first_seed},
                                {"description", first->description},
                                {"ts1", TsJson(first->ts1)},
                                {"ts2", TsJson(first->ts2)},
                                {"ts3", TsJson(first->ts3)},
                                {"wait_us", first->wait_us},
                                {"trx1_visible_at", first->trx1_visible_at},
                                {"trx2_invoked_at", first->trx2_invoked_at},
                                {"trx2_read", first->trx2_read},
                                {"steps", first->steps}};
  }
  out.report = std::move(rep);
  std::ostringstream s;
  s << config.cluster.name << " runs=" << config.listing1_runs << " anomalies=" << anomalies;
  if (first) s << " first_seed=" << *first_seed << ": " << first->description;
  out.summary = s.str();
  return out;
}

ScenarioOutcome ExecuteRcpExample(const ScenarioConfig& config) {
  RcpExampleReport r = RunRcpExample();
  json ts = json::object();
  for (size_t i = 1; i < r.ts.size(); ++i) ts["trx" + std::to_string(i)] = TsJson(r.ts[i]);
  json replica_max = json::object();
  for (const auto& [name, t] : r.replica_max) replica_max[name] = TsJson(t);
  int rcp_index = 0;
  for (size_t i = 1; i < r.ts.size(); ++i)
    if (r.ts[i] == r.rcp) rcp_index = static_cast<int>(i);
  ScenarioOutcome out;
  out.report = json{{"schema_version", kReportSchemaVersion},
                    {"kind", ScenarioKindName(config.kind)},
                    {"scenario", config.cluster.name},
                    {"commit_ts", ts},
                    {"replica_max", replica_max},
                    {"rcp", TsJson(r.rcp)},
                    {"rcp_equals_trx", rcp_index},
                    {"visible", r.visible},
                    {"replica_logs", r.replica_logs},
                    {"verdict", "clean"}};
  std::ostringstream s;
  s << config.cluster.name << " rcp=ts" << rcp_index << " visible={";
  bool sep = false;
  for (int v : r.visible) {
    s << (sep ? "," : "") << "Trx" << v;
    sep = true;
  }
  s << "}";
  out.summary = s.str();
  return out;
}

int MergeExit(int a, int b) {
  if (a == kExitConfigError || b == kExitConfigError) return kExitConfigError;
  return std::max(a, b);
}

}  // namespace

std::string ResolveOutDir(const std::optional<std::string>& cli_out, const OutputConfig& output) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  if (!output.dir.empty()) return output.dir;
  return "geosim-out";
}

json ClusterReport(const ScenarioConfig& config, const RunResult& result) {
  const ClusterConfig& c = config.cluster;
  json rcp = json::array();
  for (const HistoryEvent& e : result.history.events()) {
    if (e.kind != EventKind::kRcpPublish) continue;
    rcp.push_back(json{{"at", e.at}, {"node", e.node}, {"epoch", e.epoch}, {"ts", e.ts.value}});
  }
  size_t violations = result.checks.total() + result.clock_envelope_violations;
  return json{
      {"schema_version", kReportSchemaVersion},
      {"kind", ScenarioKindName(config.kind)},
      {"scenario", c.name},
      {"seed", c.seed},
      {"duration_us", c.duration_us},
      {"initial_mode", TsModeName(c.modes.initial_mode)},
      {"metrics", MetricsJson(result.metrics)},
      {"checks", ChecksJson(result.checks)},
      {"total_violations", violations},
      {"clock_audit", json{{"readings", result.clock_readings},
                           {"envelope_violations", result.clock_envelope_violations}}},
      {"rcp_trace", rcp},
      {"mode_log", result.mode_log},
      {"engine", json{{"events_processed", result.engine.events_processed},
                      {"messages_sent", result.engine.messages_sent},
                      {"messages_delivered", result.engine.messages_delivered},
                      {"messages_dropped", result.engine.messages_dropped},
                      {"trace_hash", Hex(result.trace_hash)}}},
      {"verdict", violations > 0 ? "violations" : "clean"}};
}

ScenarioOutcome ExecuteScenario(const ScenarioConfig& config, History* history_out) {
  switch (config.kind) {
    case ScenarioKind::kCluster: return ExecuteCluster(config, history_out);
    case ScenarioKind::kListing1: return ExecuteListing1(config);
    case ScenarioKind::kRcpExample: return ExecuteRcpExample(config);
  }
  throw ConfigError("unknown scenario kind");
}

void WriteOutcome(const std::string& dir, const ScenarioOutcome& outcome, const History* history) {
  fs::create_directories(dir);
  WriteFile(fs::path(dir) / "report.json", outcome.report.dump(2) + "\n");
  std::ostringstream csv;
  csv << "field,value\n";
  FlattenCsv(outcome.report, "", csv);
  WriteFile(fs::path(dir) / "report.csv", csv.str());
  if (history) {
    std::ofstream out(fs::path(dir) / "history.ndjson", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write history in " + dir);
    history->WriteNdjson(out);
  }
}

std::vector<double> ParseValueList(const std::string& values) {
  std::vector<double> out;
  if (values.find_first_not_of(" \t") == std::string::npos) throw ConfigError("empty value list");
  std::stringstream in(values);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) throw ConfigError("empty item in value list '" + values + "'");
    size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw ConfigError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

namespace {

// Runs a loaded scenario and writes its outputs. Config problems found while
// building the cluster (such as unknown fault targets) map to exit code 2.
int RunAndWrite(const ScenarioConfig& config, const std::string& dir, std::ostream& log,
                ScenarioOutcome* keep = nullptr) {
  ScenarioOutcome outcome;
  History history;
  const bool want_history = config.kind == ScenarioKind::kCluster && config.output.history;
  try {
    outcome = ExecuteScenario(config, want_history ? &history : nullptr);
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const UnknownTargetError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  WriteOutcome(dir, outcome, want_history ? &history : nullptr);
  log << outcome.summary << "\n";
  int code = outcome.exit_code;
  if (keep) *keep = std::move(outcome);
  return code;
}

}  // namespace

int RunCommand(const std::string& config_path, std::optional<uint64_t> seed,
               std::optional<std::string> out_dir, std::ostream& log) {
  ScenarioConfig config;
  try {
    config = LoadScenario(config_path);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (seed) config.cluster.seed = *seed;
  std::string dir = ResolveOutDir(out_dir, config.output);
  int code = RunAndWrite(config, dir, log);
  log << "report: " << (fs::path(dir) / "report.json").string() << " exit=" << code << "\n";
  return code;
}

int SweepCommand(const std::string& config_path, const std::string& param,
                 const std::string& values, std::optional<std::string> out_dir,
                 std::ostream& log) {
  std::vector<double> list;
  std::vector<ScenarioConfig> configs;
  try {
    list = ParseValueList(values);
    for (double v : list) configs.push_back(LoadScenario(config_path, {{param, v}}));
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const std::string root = ResolveOutDir(out_dir, configs.front().output);
  const size_t n = list.size();
  std::vector<int> codes(n, kExitClean);
  std::vector<ScenarioOutcome> outcomes(n);
  std::vector<std::ostringstream> logs(n);
  std::vector<std::string> dirs(n);
  for (size_t i = 0; i < n; ++i)
    dirs[i] = (fs::path(root) / (param + "=" + FormatValue(list[i]))).string();

  size_t workers = std::max<size_t>(1, std::min<size_t>(n, std::thread::hardware_concurrency()));
  size_t next = 0;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n) return;
          i = next++;
        }
        codes[i] = RunAndWrite(configs[i], dirs[i], logs[i], &outcomes[i]);
      }
    });
  }
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "param,value,exit_code,committed,queries,throughput_per_s,txn_throughput_per_s,"
         "query_throughput_per_s,p50_latency_us,p99_latency_us,abort_rate,replica_read_share,"
         "violations\n";
  int code = kExitClean;
  for (size_t i = 0; i < n; ++i) {
    log << logs[i].str();
    code = MergeExit(code, codes[i]);
    csv << param << "," << FormatValue(list[i]) << "," << codes[i];
    if (const auto& m = outcomes[i].metrics) {
      csv << "," << m->committed << "," << m->queries << "," << m->throughput_per_s << ","
          << m->txn_throughput_per_s << "," << m->query_throughput_per_s << ","
          << m->p50_latency_us << "," << m->p99_latency_us << "," << m->abort_rate << ","
          << m->replica_read_share;
    } else {
      csv << ",,,,,,,,,";
    }
    csv << "," << outcomes[i].violations << "\n";
  }
  fs::create_directories(root);
  WriteFile(fs::path(root) / "summary.csv", csv.str());
  log << "summary: " << (fs::path(root) / "summary.csv").string() << " exit=" << code << "\n";
  return code;
}

int CheckCommand(const std::string& history_path, std::ostream& log) {
  History history;
  try {
    std::ifstream in(history_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + history_path);
    history = History::ReadNdjson(in);
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  CheckReport checks = RunCheckers(history, CheckToggles{});
  MetricsReport metrics = ComputeMetrics(history);
  json rep{{"schema_version", kReportSchemaVersion},
           {"scenario", history.meta().scenario},
           {"seed", history.meta().seed},
           {"metrics", MetricsJson(metrics)},
           {"checks", ChecksJson(checks)},
           {"total_violations", checks.total()},
           {"verdict", checks.total() > 0 ? "violations" : "clean"}};
  log << rep.dump(2) << "\n";
  return checks.total() > 0 ? kExitViolations : kExitClean;
}

}  // namespace geosim
