// Acceptance suite. Prints one PASS/FAIL line per criterion and exits 0
// only when every criterion passes. Usage: acceptance <scenarios dir>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "geosim/cli/config.h"
#include "geosim/cli/runner.h"
#include "geosim/ror/skyline.h"

using namespace geosim;

namespace {

// Tolerances and sizes.
constexpr int kListing1SeedsWithoutWait = 100;
constexpr int kListing1SeedsWithWait = 1000;
constexpr double kListing1MaxSeconds = 60.0;
constexpr double kRcpExampleMaxSeconds = 1.0;
constexpr int kSerializabilitySeeds = 20;
constexpr SimTime kTransitionAtUs = 12'000'000;
constexpr uint64_t kMinOpsPerSerializabilityRun = 9'900;  // of a 10^4 budget
constexpr double kSerializabilityMaxSeconds = 600.0;
constexpr SimTime kLivenessWindowUs = 200'000;
constexpr int kReplicaConsistencySeeds = 100;
constexpr int kFailoverSeeds = 100;
constexpr double kGtmDelayMaxRatio = 0.5;
constexpr double kGClockMaxVariation = 0.10;
constexpr double kReplicaReadMinSpeedup = 3.0;
constexpr int kSkylineInputs = 10'000;
constexpr size_t kSkylineMaxN = 64;
constexpr int kStalenessSeeds = 50;
const std::vector<double> kGtmDelaysMs = {0, 10, 50, 100};
const std::string kListing1Anomaly = "Trx2 cannot see Trx1's committed update";

std::string g_dir;
uint64_t g_clock_readings = 0;
uint64_t g_envelope_violations = 0;
uint64_t g_cluster_runs = 0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

ScenarioConfig Load(const std::string& name, const KeyOverrides& overrides = {}) {
  return LoadScenario(g_dir + "/" + name, overrides);
}

// Runs a scenario and folds its clock audit into the global tally.
ScenarioOutcome Execute(const ScenarioConfig& c, History* history = nullptr) {
  ScenarioOutcome o = ExecuteScenario(c, history);
  if (c.kind == ScenarioKind::kCluster) {
    ++g_cluster_runs;
    g_clock_readings += o.report["clock_audit"]["readings"].get<uint64_t>();
    g_envelope_violations += o.report["clock_audit"]["envelope_violations"].get<uint64_t>();
  }
  return o;
}

size_t CheckerCount(const ScenarioOutcome& o, const std::string& checker) {
  return o.report["checks"][checker]["violations"].get<size_t>();
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

Verdict Listing1() {
  auto start = std::chrono::steady_clock::now();
  ScenarioConfig c = Load("listing1.toml");
  c.listing1.enable_wait = false;
  c.listing1_runs = kListing1SeedsWithoutWait;
  ScenarioOutcome off = Execute(c);
  int anomalies = off.report["anomalies"].get<int>();
  bool exact = anomalies > 0 && off.report["first_anomaly"]["description"]
                                        .get<std::string>()
                                        .find(kListing1Anomaly) != std::string::npos;
  c.listing1.enable_wait = true;
  c.listing1_runs = kListing1SeedsWithWait;
  ScenarioOutcome on = Execute(c);
  int with_wait = on.report["anomalies"].get<int>();
  int applicable = on.report["applicable_runs"].get<int>();
  double secs = Seconds(start);
  Verdict v;
  v.pass = anomalies >= 1 && exact && with_wait == 0 && applicable == kListing1SeedsWithWait &&
           secs < kListing1MaxSeconds;
  v.detail = std::to_string(anomalies) + "/" + std::to_string(kListing1SeedsWithoutWait) +
             " anomalies without wait, " + std::to_string(with_wait) + "/" +
             std::to_string(kListing1SeedsWithWait) + " with wait, " + Fmt("%.1f s", secs);
  return v;
}

Verdict RcpExample() {
  auto start = std::chrono::steady_clock::now();
  ScenarioOutcome o = Execute(Load("fig5_rcp.toml"));
  double secs = Seconds(start);
  const auto& r = o.report;
  auto value = [](const nlohmann::json& ts) { return ts["value"].get<uint64_t>(); };
  uint64_t ts3 = value(r["commit_ts"]["trx3"]);
  uint64_t ts4 = value(r["commit_ts"]["trx4"]);
  uint64_t ts5 = value(r["commit_ts"]["trx5"]);
  uint64_t m1 = value(r["replica_max"]["Replica 1"]);
  uint64_t m2 = value(r["replica_max"]["Replica 2"]);
  uint64_t m3 = value(r["replica_max"]["Replica 3"]);
  uint64_t rcp = value(r["rcp"]);
  std::set<int> visible = r["visible"].get<std::set<int>>();
  Verdict v;
  v.pass = m1 == ts4 && m2 == ts5 && m3 == ts3 && rcp == std::min({m1, m2, m3}) && rcp == ts3 &&
           visible == std::set<int>{1, 2, 3} && secs < kRcpExampleMaxSeconds;
  v.detail = "RCP " + std::to_string(rcp) + " = min{" + std::to_string(m1) + ", " +
             std::to_string(m2) + ", " + std::to_string(m3) + "}, visible " + r["visible"].dump() +
             Fmt(", %.3f s", secs);
  return v;
}

// What criterion 4 needs from each transition run of criterion 3.
struct TransitionRun {
  TransitionDirection direction;
  bool completed = false;
  SimTime length_us = 0;
  size_t windows = 0;
  size_t empty_windows = 0;
  std::map<std::string, uint64_t> abort_reasons;
};
std::vector<TransitionRun> g_transition_runs;

// Transition interval: first mode change to "transition complete". Every
// 200 ms window starting inside it needs a commit-visible event.
TransitionRun SummarizeTransition(TransitionDirection dir, const History& h,
                                  const MetricsReport& m) {
  TransitionRun run;
  run.direction = dir;
  run.abort_reasons = m.abort_reasons;
  SimTime begin = 0, end = 0;
  bool started = false;
  for (const auto& e : h.events()) {
    if (e.kind != EventKind::kModeChange) continue;
    if (!started) {
      begin = e.at;
      started = true;
    }
    if (e.detail.find("transition complete") != std::string::npos) {
      end = e.at;
      run.completed = true;
      break;
    }
  }
  if (!run.completed) return run;
  run.length_us = end - begin;
  std::vector<SimTime> commits;
  for (const auto& e : h.events())
    if (e.kind == EventKind::kCommitVisible) commits.push_back(e.at);
  for (SimTime w = begin; w <= end; w += kLivenessWindowUs) {
    ++run.windows;
    auto it = std::lower_bound(commits.begin(), commits.end(), w);
    if (it == commits.end() || *it >= w + kLivenessWindowUs) ++run.empty_windows;
  }
  return run;
}

Verdict Serializability() {
  auto start = std::chrono::steady_clock::now();
  struct Variant {
    const char* name;
    const char* initial;
    std::optional<TransitionDirection> transition;
  };
  const Variant variants[] = {
      {"gtm", "gtm", std::nullopt},
      {"gclock", "gclock", std::nullopt},
      {"gtm->gclock", "gtm", TransitionDirection::kGtmToGClock},
      {"gclock->gtm", "gclock", TransitionDirection::kGClockToGtm},
  };
  std::string detail;
  bool pass = true;
  uint64_t min_ops = UINT64_MAX;
  for (const auto& var : variants) {
    size_t r12 = 0;
    for (int seed = 1; seed <= kSerializabilitySeeds; ++seed) {
      ScenarioConfig c = Load("serializability.toml");
      c.cluster.seed = static_cast<uint64_t>(seed);
      c.cluster.modes.initial_mode = ParseTsMode(var.initial);
      c.cluster.modes.transitions.clear();
      if (var.transition) c.cluster.modes.transitions.push_back({kTransitionAtUs, *var.transition});
      History h;
      ScenarioOutcome o = Execute(c, &h);
      r12 += CheckerCount(o, "external_serializability");
      const MetricsReport& m = *o.metrics;
      min_ops = std::min(min_ops, m.committed + m.aborted + m.queries);
      if (var.transition) g_transition_runs.push_back(SummarizeTransition(*var.transition, h, m));
    }
    pass = pass && r12 == 0;
    detail += std::string(var.name) + " " + std::to_string(r12) + ", ";
  }
  double secs = Seconds(start);
  Verdict v;
  v.pass = pass && min_ops >= kMinOpsPerSerializabilityRun && secs < kSerializabilityMaxSeconds;
  v.detail = "R1/R2 violations: " + detail + "min ops per run " + std::to_string(min_ops) +
             Fmt(", %.1f s", secs);
  return v;
}

Verdict TransitionLiveness() {
  Verdict v;
  if (g_transition_runs.empty()) {
    v.detail = "no transition runs recorded";
    return v;
  }
  bool pass = true;
  size_t windows = 0, empty_windows = 0;
  uint64_t reverse_aborts = 0, forward_other = 0, forward_stale = 0;
  SimTime longest = 0;
  for (const auto& run : g_transition_runs) {
    pass = pass && run.completed;
    longest = std::max(longest, run.length_us);
    windows += run.windows;
    empty_windows += run.empty_windows;
    for (const auto& [reason, n] : run.abort_reasons) {
      if (reason == "conflict") continue;
      if (run.direction == TransitionDirection::kGClockToGtm) {
        reverse_aborts += n;
      } else if (reason == "stale_gtm") {
        forward_stale += n;
      } else {
        forward_other += n;
      }
    }
  }
  v.pass = pass && empty_windows == 0 && reverse_aborts == 0 && forward_other == 0;
  v.detail = std::to_string(g_transition_runs.size()) + " runs, " + std::to_string(windows) +
             " windows of 200 ms, " + std::to_string(empty_windows) + " without commits; " +
             "longest transition " + std::to_string(longest) + " us; gclock->gtm transition aborts " +
             std::to_string(reverse_aborts) + "; gtm->gclock stale_gtm " +
             std::to_string(forward_stale) + ", other " + std::to_string(forward_other);
  return v;
}

Verdict ReplicaConsistency() {
  size_t violations = 0;
  uint64_t replica_reads = 0, blocked = 0, blocked_by_prepared = 0, out_of_order = 0;
  for (int seed = 1; seed <= kReplicaConsistencySeeds; ++seed) {
    ScenarioConfig c = Load("replica_consistency.toml");
    c.cluster.seed = static_cast<uint64_t>(seed);
    History h;
    ScenarioOutcome o = Execute(c, &h);
    violations += o.violations;
    std::set<uint64_t> prepared;
    for (const auto& log : h.logs()) {
      Timestamp last;
      for (const auto& r : log.records) {
        if (r.kind == RedoKind::kPrepare) prepared.insert(r.txn);
        if (r.kind == RedoKind::kCommit || r.kind == RedoKind::kCommitPrepared) {
          if (r.commit_ts < last) ++out_of_order;
          last = std::max(last, r.commit_ts);
        }
      }
    }
    for (const auto& e : h.events()) {
      if (e.kind != EventKind::kReadReturn) continue;
      for (const auto& r : e.reads) {
        if (!r.replica) continue;
        ++replica_reads;
        if (r.blocked_by == 0) continue;
        ++blocked;
        blocked_by_prepared += prepared.count(r.blocked_by);
      }
    }
  }
  Verdict v;
  v.pass = violations == 0 && replica_reads > 0 && blocked_by_prepared > 0 && out_of_order > 0;
  v.detail = std::to_string(violations) + " violations over " +
             std::to_string(kReplicaConsistencySeeds) + " seeds; " +
             std::to_string(replica_reads) + " replica reads, " + std::to_string(blocked) +
             " blocked (" + std::to_string(blocked_by_prepared) + " by prepared 2PC), " +
             std::to_string(out_of_order) + " out-of-order commit records";
  return v;
}

Verdict FailoverFreshness() {
  size_t regressions = 0;
  int failovers = 0;
  uint64_t replica_queries = 0;
  for (int seed = 1; seed <= kFailoverSeeds; ++seed) {
    ScenarioConfig c = Load("collector_failover.toml");
    c.cluster.seed = static_cast<uint64_t>(seed);
    ScenarioOutcome o = Execute(c);
    regressions += CheckerCount(o, "monotonic_freshness");
    replica_queries += o.metrics->replica_queries;
    uint64_t max_epoch = 0;
    for (const auto& p : o.report["rcp_trace"]) max_epoch = std::max(max_epoch, p["epoch"].get<uint64_t>());
    failovers += max_epoch > 1;
  }
  Verdict v;
  v.pass = regressions == 0 && failovers == kFailoverSeeds && replica_queries > 0;
  v.detail = std::to_string(regressions) + " regressions over " + std::to_string(kFailoverSeeds) +
             " seeds; failover observed in " + std::to_string(failovers) + "; " +
             std::to_string(replica_queries) + " replica-served queries";
  return v;
}

std::vector<double> DelaySweep(const std::string& scenario) {
  std::vector<double> out;
  for (double ms : kGtmDelaysMs) {
    ScenarioOutcome o = Execute(Load(scenario, {{"network.gtm_extra_delay_ms", ms}}));
    out.push_back(o.metrics->throughput_per_s);
  }
  return out;
}

Verdict DelayTrend() {
  std::vector<double> gtm = DelaySweep("fig6_gtm_delay.toml");
  std::vector<double> gclock = DelaySweep("fig6_gclock_delay.toml");
  double ratio = gtm.front() > 0 ? gtm.back() / gtm.front() : 1.0;
  double lo = *std::min_element(gclock.begin(), gclock.end());
  double hi = *std::max_element(gclock.begin(), gclock.end());
  double variation = lo > 0 ? (hi - lo) / lo : 1.0;
  Verdict v;
  v.pass = ratio <= kGtmDelayMaxRatio && variation <= kGClockMaxVariation;
  std::string g, c;
  for (size_t i = 0; i < gtm.size(); ++i) {
    g += Fmt("%.1f ", gtm[i]);
    c += Fmt("%.1f ", gclock[i]);
  }
  v.detail = "GTM tps at 0/10/50/100 ms: " + g + Fmt("(100/0 = %.3f); ", ratio) +
             "GClock tps: " + c + Fmt("(variation %.3f)", variation);
  return v;
}

Verdict ReplicaReadBenefit() {
  ScenarioOutcome off = Execute(Load("fig6_ror.toml", {{"workload.replica_reads", 0}}));
  ScenarioOutcome on = Execute(Load("fig6_ror.toml", {{"workload.replica_reads", 1}}));
  double a = off.metrics->throughput_per_s;
  double b = on.metrics->throughput_per_s;
  double speedup = a > 0 ? b / a : 0.0;
  Verdict v;
  v.pass = speedup >= kReplicaReadMinSpeedup && off.violations == 0 && on.violations == 0;
  v.detail = Fmt("%.1f vs %.1f queries/s without/with replica reads, %.2fx", a, b, speedup);
  return v;
}

// O(n^2) dominance oracle.
std::vector<NodeId> BruteForceSkyline(const std::vector<NodeMetrics>& in) {
  std::vector<std::pair<uint64_t, NodeId>> keep;
  for (const auto& a : in) {
    if (!a.healthy) continue;
    bool dominated = false;
    for (const auto& b : in) {
      if (!b.healthy) continue;
      bool no_worse = b.staleness_us <= a.staleness_us && b.latency_us <= a.latency_us;
      bool better = b.staleness_us < a.staleness_us || b.latency_us < a.latency_us;
      if (no_worse && better) dominated = true;
    }
    if (!dominated) keep.push_back({a.staleness_us, a.node});
  }
  std::sort(keep.begin(), keep.end());
  std::vector<NodeId> out;
  for (const auto& [s, n] : keep) out.push_back(n);
  return out;
}

Verdict SkylineEquivalence() {
  std::mt19937_64 rng(20240601);
  int mismatches = 0;
  size_t largest = 0;
  for (int i = 0; i < kSkylineInputs; ++i) {
    size_t n = 1 + rng() % kSkylineMaxN;
    largest = std::max(largest, n);
    // Mix narrow ranges (many ties) with wide ones.
    uint64_t range = (i % 2 == 0) ? 1 + rng() % 16 : 1'000'000;
    std::vector<NodeMetrics> in(n);
    for (size_t j = 0; j < n; ++j) {
      in[j].node = static_cast<NodeId>(j);
      in[j].staleness_us = rng() % range;
      in[j].latency_us = rng() % range;
      in[j].healthy = rng() % 10 != 0;
    }
    std::vector<NodeId> got;
    for (const auto& m : BuildSkyline(in)) got.push_back(m.node);
    if (got != BruteForceSkyline(in)) ++mismatches;
  }
  Verdict v;
  v.pass = mismatches == 0;
  v.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(kSkylineInputs) +
             " inputs (n up to " + std::to_string(largest) + ")";
  return v;
}

Verdict BoundedStaleness() {
  size_t violations = 0, other = 0;
  uint64_t replica_queries = 0;
  for (int seed = 1; seed <= kStalenessSeeds; ++seed) {
    ScenarioConfig c = Load("bounded_staleness.toml");
    c.cluster.seed = static_cast<uint64_t>(seed);
    ScenarioOutcome o = Execute(c);
    size_t b = CheckerCount(o, "bounded_staleness");
    violations += b;
    other += o.violations - b;
    replica_queries += o.metrics->replica_queries;
  }
  Verdict v;
  v.pass = violations == 0 && other == 0 && replica_queries > 0;
  v.detail = std::to_string(violations) + " staleness violations over " +
             std::to_string(kStalenessSeeds) + " seeds (" + std::to_string(other) +
             " other); " + std::to_string(replica_queries) + " replica-served queries";
  return v;
}

Verdict ClockEnvelope() {
  Verdict v;
  v.pass = g_envelope_violations == 0 && g_clock_readings > 0;
  v.detail = std::to_string(g_envelope_violations) + " violations in " +
             std::to_string(g_clock_readings) + " healthy readings across " +
             std::to_string(g_cluster_runs) + " cluster runs";
  return v;
}

Verdict Mutations() {
  struct Case {
    const char* scenario;
    std::function<void(MutationConfig&)> clear;
  };
  const Case cases[] = {
      {"neg_commit_wait.toml", [](MutationConfig& m) { m.disable_commit_wait = false; }},
      {"neg_rcp_clamp.toml", [](MutationConfig& m) { m.disable_rcp_clamp = false; }},
      {"neg_heartbeat_log.toml", [](MutationConfig& m) { m.heartbeat_bypass_log = false; }},
  };
  bool pass = true;
  std::string detail;
  for (const auto& cs : cases) {
    ScenarioConfig c = Load(cs.scenario);
    ScenarioOutcome bad = Execute(c);
    cs.clear(c.cluster.mutations);
    ScenarioOutcome good = Execute(c);
    bool flagged = bad.exit_code == kExitViolations && bad.violations > 0;
    bool twin_clean = good.exit_code == kExitClean;
    pass = pass && flagged && twin_clean;
    detail += std::string(cs.scenario) + " " + std::to_string(bad.violations) + " (clean twin " +
              std::to_string(good.violations) + "); ";
  }
  Verdict v;
  v.pass = pass;
  v.detail = detail;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  g_dir = argc > 1 ? argv[1] : "scenarios";
  // Clock envelope is tallied over every other criterion, so it runs last.
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 listing1 anomaly and commit wait", Listing1},
      {"2 rcp worked example", RcpExample},
      {"3 external serializability", Serializability},
      {"4 transition liveness", TransitionLiveness},
      {"5 replica consistency oracle", ReplicaConsistency},
      {"6 monotonic freshness across failover", FailoverFreshness},
      {"7 gtm delay trend", DelayTrend},
      {"8 replica read benefit", ReplicaReadBenefit},
      {"9 skyline equivalence", SkylineEquivalence},
      {"10 bounded staleness", BoundedStaleness},
      {"12 negative-control mutations", Mutations},
      {"11 clock envelope", ClockEnvelope},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.detail = std::string("error: ") + e.what();
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << ": " << v.detail << std::endl;
    failed += !v.pass;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
