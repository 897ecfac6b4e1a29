#include <gtest/gtest.h>

#include "geosim/coord/cluster.h"
#include "geosim/coord/compute_node.h"
#include "geosim/coord/data_node.h"
#include "geosim/coord/gtm_node.h"
#include "geosim/coord/replica_node.h"

namespace geosim {
namespace {

ClusterConfig Small(TsMode mode, uint64_t seed) {
  ClusterConfig c = ThreeCityConfig();
  c.seed = seed;
  c.duration_us = 3'000'000;
  c.modes.initial_mode = mode;
  c.workload.clients = 9;
  c.workload.keys_per_table = 50;
  c.workload.remote_fraction = 0.5;
  c.replication.random_lag_max_us = 100'000;
  return c;
}

uint64_t Count(const History& h, EventKind kind) {
  uint64_t n = 0;
  for (const auto& e : h.events()) n += e.kind == kind;
  return n;
}

TEST(DecisionLogTest, FirstOutcomeHolds) {
  DecisionLog log;
  EXPECT_EQ(log.Find(1), nullptr);
  Timestamp t;
  t.value = 5;
  EXPECT_EQ(log.TryDecide(1, t), t);
  EXPECT_EQ(log.TryDecide(1, std::nullopt), t);
  EXPECT_EQ(log.TryDecide(2, std::nullopt), std::nullopt);
  EXPECT_EQ(log.TryDecide(2, t), std::nullopt);
  ASSERT_NE(log.Find(2), nullptr);
  EXPECT_FALSE(log.Find(2)->has_value());
}

TEST(ClusterConfigTest, ValidateRejectsBadTopology) {
  ClusterConfig c = ThreeCityConfig();
  EXPECT_NO_THROW(c.Validate());
  c.topology.shards = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ThreeCityConfig();
  c.topology.gtm_region = 9;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(ClusterTest, CleanRunsInBothModes) {
  for (TsMode mode : {TsMode::kGtm, TsMode::kGClock}) {
    Cluster cluster(Small(mode, 3));
    RunResult r = cluster.Run();
    EXPECT_EQ(r.checks.total(), 0u) << TsModeName(mode);
    EXPECT_GT(r.metrics.committed, 100u);
    EXPECT_GT(r.metrics.queries, 50u);
    EXPECT_GT(r.metrics.replica_queries, 0u);
    EXPECT_GT(r.metrics.rcp_publications, 0u);
    EXPECT_EQ(r.clock_envelope_violations, 0u);
    // GTM mode never reads a clock.
    if (mode == TsMode::kGClock) EXPECT_GT(r.clock_readings, 0u);
    // Every shard's primary log replays to the committed count it reports.
    uint64_t commits = 0;
    for (const auto& log : r.history.logs())
      for (const auto& rec : log.records)
        commits += rec.kind == RedoKind::kCommit || rec.kind == RedoKind::kCommitPrepared;
    EXPECT_GE(commits, r.metrics.committed);
  }
}

TEST(ClusterTest, SameSeedSameRun) {
  RunResult a = Cluster(Small(TsMode::kGClock, 11)).Run();
  RunResult b = Cluster(Small(TsMode::kGClock, 11)).Run();
  RunResult c = Cluster(Small(TsMode::kGClock, 12)).Run();
  EXPECT_EQ(a.trace_hash, b.trace_hash);
  EXPECT_EQ(a.history.events().size(), b.history.events().size());
  EXPECT_EQ(a.metrics.committed, b.metrics.committed);
  EXPECT_NE(a.trace_hash, c.trace_hash);
}

TEST(ClusterTest, TransitionsReachTargetModeWithoutViolations) {
  for (auto [from, dir, to] :
       {std::tuple{TsMode::kGtm, TransitionDirection::kGtmToGClock, TsMode::kGClock},
        std::tuple{TsMode::kGClock, TransitionDirection::kGClockToGtm, TsMode::kGtm}}) {
    ClusterConfig cfg = Small(from, 5);
    cfg.modes.transitions = {{1'000'000, dir}};
    Cluster cluster(cfg);
    RunResult r = cluster.Run();
    EXPECT_EQ(r.checks.total(), 0u);
    EXPECT_EQ(cluster.gtm().server().mode(), to);
    EXPECT_FALSE(cluster.gtm().server().transition_in_progress());
    for (const auto& cn : cluster.cns()) EXPECT_EQ(cn->mode(), to);
    EXPECT_GT(r.metrics.mode_changes, 0u);
    EXPECT_FALSE(r.mode_log.empty());
    // Commits continue after the switch.
    uint64_t late = 0;
    for (const auto& e : r.history.events())
      late += e.kind == EventKind::kCommitVisible && e.at > 1'500'000;
    EXPECT_GT(late, 20u);
  }
}

TEST(ClusterTest, PrimaryCrashAndRecoveryStaysConsistent) {
  ClusterConfig cfg = Small(TsMode::kGClock, 8);
  NamedFault crash;
  crash.kind = FaultKind::kNodeCrash;
  crash.target = "dn1";
  crash.at_us = 800'000;
  NamedFault recover = crash;
  recover.kind = FaultKind::kNodeRecover;
  recover.at_us = 1'500'000;
  cfg.faults = {crash, recover};
  Cluster cluster(cfg);
  RunResult r = cluster.Run();
  EXPECT_EQ(r.checks.total(), 0u);
  EXPECT_GT(Count(r.history, EventKind::kAbort), 0u);
  EXPECT_GT(r.metrics.committed, 100u);
  // Nothing stays prepared forever on the recovered shard.
  EXPECT_TRUE(cluster.Primary(1).store().InDoubt().empty());
}

TEST(ClusterTest, UnknownFaultTargetThrows) {
  ClusterConfig cfg = Small(TsMode::kGtm, 1);
  NamedFault f;
  f.target = "nope";
  cfg.faults = {f};
  EXPECT_THROW(Cluster(cfg).Run(), UnknownTargetError);
}

}  // namespace
}  // namespace geosim
