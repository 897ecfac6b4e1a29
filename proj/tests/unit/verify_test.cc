#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "geosim/store/distribution.h"
#include "geosim/verify/checkers.h"
#include "geosim/verify/history.h"
#include "geosim/verify/metrics.h"
#include "geosim/verify/workload.h"

namespace geosim {
namespace {

Timestamp Ts(uint64_t v) {
  Timestamp t;
  t.value = v;
  return t;
}

// One shard, txn 1 writes k = "v1" at ts 10 and becomes visible at t = 100
// after requesting its commit at t = 80.
History BaseHistory() {
  History h;
  h.meta().start_us = 0;
  h.meta().end_us = 1'000'000;
  ShardLog log;
  RedoRecord w;
  w.lsn = 1;
  w.kind = RedoKind::kWrite;
  w.txn = 1;
  w.keys = {"k"};
  w.payload = "v1";
  w.appended_at = 70;
  RedoRecord c;
  c.lsn = 2;
  c.kind = RedoKind::kCommit;
  c.txn = 1;
  c.commit_ts = Ts(10);
  c.appended_at = 90;
  log.records = {w, c};
  h.logs().push_back(log);

  HistoryEvent e;
  e.kind = EventKind::kInvoke;
  e.txn = 1;
  e.at = 60;
  h.Record(e);
  e.kind = EventKind::kCommitRequest;
  e.at = 80;
  h.Record(e);
  e.kind = EventKind::kCommitVisible;
  e.at = 100;
  e.ts = Ts(10);
  e.keys = {"k"};
  h.Record(e);
  return h;
}

ReadObservation Obs(std::optional<std::string> value, uint64_t version, bool replica = false) {
  ReadObservation r;
  r.key = "k";
  r.value = std::move(value);
  r.version = Ts(version);
  r.replica = replica;
  return r;
}

void Query(History& h, uint64_t txn, uint32_t client, SimTime invoke, SimTime ret,
           uint64_t snapshot, ReadObservation obs, RouteKind route = RouteKind::kPrimary) {
  HistoryEvent e;
  e.kind = EventKind::kInvoke;
  e.txn = txn;
  e.client = client;
  e.at = invoke;
  e.read_only = true;
  h.Record(e);
  e.kind = EventKind::kReadReturn;
  e.at = ret;
  e.ts = Ts(snapshot);
  e.route = route;
  e.reads = {std::move(obs)};
  h.Record(e);
}

TEST(ExternalSerializabilityTest, StaleReadAfterVisibilityIsR1) {
  History clean = BaseHistory();
  Query(clean, 2, 0, 200, 210, 20, Obs("v1", 10));
  EXPECT_TRUE(CheckExternalSerializability(clean).empty());

  History stale = BaseHistory();
  Query(stale, 2, 0, 200, 210, 5, Obs(std::nullopt, 0));
  auto v = CheckExternalSerializability(stale);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].checker, "R1");
  EXPECT_EQ(v[0].other_txn, 1u);

  // Invoked before txn 1 was visible: not constrained.
  History early = BaseHistory();
  Query(early, 2, 0, 95, 210, 5, Obs(std::nullopt, 0));
  EXPECT_TRUE(CheckExternalSerializability(early).empty());
}

TEST(ExternalSerializabilityTest, SeeingALaterRequestedCommitIsR2) {
  History h = BaseHistory();
  HistoryEvent s;
  s.kind = EventKind::kSnapshot;
  s.txn = 3;
  s.at = 50;
  h.Record(s);
  Query(h, 3, 0, 40, 120, 10, Obs("v1", 10));
  auto v = CheckExternalSerializability(h);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].checker, "R2");
}

TEST(ReplicaConsistencyTest, ComparesAgainstLogReplay) {
  History h = BaseHistory();
  Query(h, 2, 0, 200, 210, 15, Obs("v1", 10, true), RouteKind::kReplica);
  Query(h, 3, 0, 220, 230, 9, Obs(std::nullopt, 0, true), RouteKind::kReplica);
  EXPECT_TRUE(CheckReplicaConsistency(h).empty());
  Query(h, 4, 0, 240, 250, 9, Obs("v1", 10, true), RouteKind::kReplica);
  Query(h, 5, 0, 260, 270, 15, Obs(std::nullopt, 0, true), RouteKind::kReplica);
  EXPECT_EQ(CheckReplicaConsistency(h).size(), 2u);
}

TEST(MonotonicFreshnessTest, SuccessiveQueriesMustNotGoBack) {
  History h;
  Query(h, 1, 0, 0, 10, 100, Obs(std::nullopt, 0, true), RouteKind::kReplica);
  Query(h, 2, 0, 20, 30, 90, Obs(std::nullopt, 0, true), RouteKind::kReplica);
  auto v = CheckMonotonicFreshness(h);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].txn, 2u);
  EXPECT_EQ(v[0].other_txn, 1u);
}

TEST(MonotonicFreshnessTest, OverlappingQueriesAreNotOrdered) {
  History h;
  HistoryEvent e;
  e.kind = EventKind::kInvoke;
  e.client = 0;
  e.read_only = true;
  e.txn = 1;
  e.at = 0;
  h.Record(e);
  e.txn = 2;
  e.at = 5;
  h.Record(e);
  e.kind = EventKind::kReadReturn;
  e.route = RouteKind::kReplica;
  e.txn = 1;
  e.at = 10;
  e.ts = Ts(100);
  h.Record(e);
  e.txn = 2;
  e.at = 40;
  e.ts = Ts(80);
  h.Record(e);
  EXPECT_TRUE(CheckMonotonicFreshness(h).empty());
  // Other clients and primary routes do not count either.
  Query(h, 3, 1, 50, 60, 10, Obs(std::nullopt, 0, true), RouteKind::kReplica);
  Query(h, 4, 0, 50, 60, 10, Obs(std::nullopt, 0), RouteKind::kPrimary);
  EXPECT_TRUE(CheckMonotonicFreshness(h).empty());
}

TEST(BoundedStalenessTest, TrueLagFromFirstUnreplayedRecord) {
  History h = BaseHistory();
  ReadObservation r = Obs(std::nullopt, 0, true);
  r.applied_lsn = 1;  // commit record (appended at 90) not yet replayed
  r.served_at = 150;
  HistoryEvent e;
  e.kind = EventKind::kReadReturn;
  e.txn = 2;
  e.staleness_bound_us = 100;
  e.reads = {r};
  h.Record(e);
  EXPECT_TRUE(CheckBoundedStaleness(h, 0).empty());  // lag 60
  HistoryEvent late = e;
  late.txn = 3;
  late.reads[0].served_at = 200;  // lag 110
  h.Record(late);
  EXPECT_EQ(CheckBoundedStaleness(h, 0).size(), 1u);
  EXPECT_TRUE(CheckBoundedStaleness(h, 10).empty());
  // Fully replayed replicas have no lag.
  HistoryEvent caught_up = late;
  caught_up.reads[0].applied_lsn = 2;
  caught_up.reads[0].served_at = 10'000;
  h.Record(caught_up);
  EXPECT_EQ(CheckBoundedStaleness(h, 0).size(), 1u);
}

TEST(CheckersTest, TogglesSelectCheckers) {
  History h = BaseHistory();
  CheckToggles t;
  t.bounded_staleness = false;
  t.monotonic_freshness = false;
  CheckReport rep = RunCheckers(h, t);
  EXPECT_EQ(rep.by_checker.size(), 2u);
  EXPECT_EQ(rep.total(), 0u);
}

TEST(MetricsTest, EmptyHistoryIsAllZero) {
  MetricsReport m = ComputeMetrics(History{});
  EXPECT_EQ(m.committed, 0u);
  EXPECT_EQ(m.throughput_per_s, 0.0);
  EXPECT_EQ(m.p99_latency_us, 0.0);
  EXPECT_EQ(m.abort_rate, 0.0);
}

TEST(MetricsTest, HundredCommitsInOneSecond) {
  History h;
  h.meta().start_us = 0;
  h.meta().end_us = 1'000'000;
  for (uint64_t i = 1; i <= 100; ++i) {
    HistoryEvent e;
    e.kind = EventKind::kInvoke;
    e.txn = i;
    e.at = i * 1000;
    h.Record(e);
    e.kind = EventKind::kCommitVisible;
    e.at = i * 1000 + i;  // latency i us
    h.Record(e);
  }
  HistoryEvent a;
  a.kind = EventKind::kAbort;
  a.txn = 500;
  a.detail = "conflict";
  h.Record(a);
  MetricsReport m = ComputeMetrics(h);
  EXPECT_EQ(m.committed, 100u);
  EXPECT_DOUBLE_EQ(m.txn_throughput_per_s, 100.0);
  EXPECT_DOUBLE_EQ(m.throughput_per_s, 100.0);
  EXPECT_DOUBLE_EQ(m.p50_latency_us, 50.0);
  EXPECT_DOUBLE_EQ(m.p99_latency_us, 99.0);
  EXPECT_NEAR(m.abort_rate, 1.0 / 101.0, 1e-12);
  EXPECT_EQ(m.abort_reasons.at("conflict"), 1u);
}

TEST(MetricsTest, PercentileNearestRank) {
  EXPECT_EQ(Percentile({}, 50), 0.0);
  EXPECT_EQ(Percentile({5, 1, 3, 2, 4}, 0), 1.0);
  EXPECT_EQ(Percentile({5, 1, 3, 2, 4}, 40), 2.0);
  EXPECT_EQ(Percentile({5, 1, 3, 2, 4}, 41), 3.0);
  EXPECT_EQ(Percentile({5, 1, 3, 2, 4}, 100), 5.0);
}

TEST(HistoryTest, NdjsonRoundTrip) {
  History h = BaseHistory();
  h.meta().seed = 42;
  h.meta().scenario = "round trip";
  ReadObservation r = Obs("v1", 10, true);
  r.node = 7;
  r.shard = 0;
  r.served_at = 333;
  r.applied_lsn = 2;
  r.blocked_by = 9;
  HistoryEvent e;
  e.kind = EventKind::kReadReturn;
  e.txn = 2;
  e.client = 3;
  e.at = 400;
  e.ts = Ts(15);
  e.route = RouteKind::kMixed;
  e.read_only = true;
  e.staleness_bound_us = 5000;
  e.reads = {r};
  e.phases = {{"prepare", 12}};
  e.detail = "x";
  h.Record(e);

  std::stringstream ss;
  h.WriteNdjson(ss);
  History back = History::ReadNdjson(ss);
  EXPECT_EQ(back.meta().seed, 42u);
  EXPECT_EQ(back.meta().scenario, "round trip");
  ASSERT_EQ(back.events().size(), h.events().size());
  const HistoryEvent& b = back.events().back();
  EXPECT_EQ(b.kind, EventKind::kReadReturn);
  EXPECT_EQ(b.route, RouteKind::kMixed);
  EXPECT_EQ(b.ts, Ts(15));
  EXPECT_EQ(b.staleness_bound_us, 5000u);
  EXPECT_EQ(b.phases.at("prepare"), 12u);
  ASSERT_EQ(b.reads.size(), 1u);
  EXPECT_EQ(b.reads[0].value, "v1");
  EXPECT_EQ(b.reads[0].blocked_by, 9u);
  EXPECT_EQ(b.reads[0].applied_lsn, 2u);
  ASSERT_EQ(back.logs().size(), 1u);
  EXPECT_EQ(back.logs()[0].records.size(), 2u);
  EXPECT_EQ(back.logs()[0].records[1].commit_ts, Ts(10));
  // Same checker verdicts either way.
  EXPECT_EQ(RunCheckers(back, {}).total(), RunCheckers(h, {}).total());

  std::stringstream bad("{\"type\":\"meta\"}\nnot json\n");
  EXPECT_THROW(History::ReadNdjson(bad), std::runtime_error);
}

TEST(WorkloadTest, DeterministicAndShaped) {
  Distribution dist(6);
  Placement p;
  p.shard_region = {0, 1, 2, 0, 1, 2};
  p.client_region = {0, 1, 2, 0};
  WorkloadSpec spec;
  spec.clients = 4;
  spec.read_fraction = 0.25;
  spec.keys_per_table = 100;
  auto a = Generate(spec, dist, p, 5, 2000);
  auto b = Generate(spec, dist, p, 5, 2000);
  auto c = Generate(spec, dist, p, 6, 2000);
  ASSERT_EQ(a.size(), 2000u);
  int reads = 0;
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].client, i % 4);
    EXPECT_EQ(a[i].reads, b[i].reads);
    EXPECT_EQ(a[i].writes, b[i].writes);
    differs = differs || a[i].reads != c[i].reads || a[i].writes != c[i].writes;
    if (a[i].kind == OpKind::kReadOnly) {
      ++reads;
      EXPECT_TRUE(a[i].writes.empty());
      // Duplicate draws collapse.
      EXPECT_GE(a[i].reads.size(), 1u);
      EXPECT_LE(a[i].reads.size(), spec.keys_per_query);
      EXPECT_TRUE(std::is_sorted(a[i].reads.begin(), a[i].reads.end()));
    }
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(reads / 2000.0, 0.25, 0.04);

  spec.read_fraction = 1.5;
  EXPECT_THROW(spec.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace geosim
