#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "geosim/ror/ddl_gate.h"
#include "geosim/ror/node_select.h"
#include "geosim/ror/rcp.h"
#include "geosim/ror/rcp_example.h"
#include "geosim/ror/skyline.h"
#include "geosim/ror/staleness.h"

namespace geosim {
namespace {

Timestamp Ts(uint64_t v) {
  Timestamp t;
  t.value = v;
  return t;
}

NodeMetrics M(NodeId node, uint64_t staleness, uint64_t latency, bool healthy = true) {
  NodeMetrics m;
  m.node = node;
  m.staleness_us = staleness;
  m.latency_us = latency;
  m.healthy = healthy;
  return m;
}

TEST(RcpTest, MinOf) {
  EXPECT_FALSE(MinOf({}).has_value());
  EXPECT_EQ(MinOf({{1, Ts(30)}, {2, Ts(10)}, {3, Ts(20)}}), Ts(10));
}

TEST(RcpTest, StallsUntilEveryReplicaIsKnown) {
  RcpCalculator c;
  c.AddReplica(1);
  c.AddReplica(2);
  EXPECT_FALSE(c.Round({{1, Ts(10)}}, 0).has_value());
  auto p = c.Round({{1, Ts(10)}, {2, Ts(7)}}, 5);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->ts, Ts(7));
  EXPECT_EQ(p->included, (std::set<NodeId>{1, 2}));
  EXPECT_EQ(p->computed_at, 5u);
}

TEST(RcpTest, MissedPollsKeepLastValueThenExclude) {
  RcpCalculator c(true, 2);
  c.AddReplica(1);
  c.AddReplica(2);
  c.Round({{1, Ts(10)}, {2, Ts(20)}}, 0);
  auto p = c.Round({{1, Ts(50)}, {2, std::nullopt}}, 1);
  EXPECT_EQ(p->ts, Ts(20));
  p = c.Round({{1, Ts(60)}}, 2);
  EXPECT_EQ(p->ts, Ts(60));
  EXPECT_EQ(p->included, (std::set<NodeId>{1}));
  EXPECT_EQ(c.excluded().count(2), 1u);
  // Back but behind the floor: stays out.
  p = c.Round({{1, Ts(70)}, {2, Ts(40)}}, 3);
  EXPECT_EQ(p->ts, Ts(70));
  EXPECT_EQ(c.excluded().count(2), 1u);
  // Caught up: rejoins.
  p = c.Round({{1, Ts(90)}, {2, Ts(80)}}, 4);
  EXPECT_EQ(p->ts, Ts(80));
  EXPECT_EQ(c.excluded().count(2), 0u);
}

TEST(RcpTest, ClampKeepsPublishedValueMonotone) {
  RcpCalculator clamped(true, 5);
  RcpCalculator raw(false, 5);
  for (auto* c : {&clamped, &raw}) c->AddReplica(1);
  clamped.Seed(Ts(100), 3);
  raw.Seed(Ts(100), 3);
  auto a = clamped.Round({{1, Ts(60)}}, 0);
  auto b = raw.Round({{1, Ts(60)}}, 0);
  EXPECT_EQ(a->ts, Ts(100));
  EXPECT_EQ(a->epoch, 3u);
  EXPECT_EQ(b->ts, Ts(60));
}

TEST(RcpTest, RandomRoundsNeverDecreaseWithClamp) {
  std::mt19937_64 rng(9);
  RcpCalculator c(true, 3);
  std::vector<uint64_t> truth(5, 0);
  for (NodeId n = 0; n < 5; ++n) c.AddReplica(n);
  Timestamp last;
  for (int round = 0; round < 5000; ++round) {
    std::map<NodeId, std::optional<Timestamp>> replies;
    for (NodeId n = 0; n < 5; ++n) {
      truth[n] += rng() % 10;
      if (rng() % 4 != 0) replies[n] = Ts(truth[n]);
    }
    auto p = c.Round(replies, static_cast<SimTime>(round));
    if (!p) continue;
    ASSERT_FALSE(p->ts < last);
    // Every included replica has actually reached the point.
    for (NodeId n : p->included) ASSERT_LE(p->ts.value, truth[n]);
    last = p->ts;
  }
}

// Replica 1 holds up to ts4, Replica 2 up to ts5, Replica 3 up to ts3; the
// RCP is ts3 and exactly Trx1..Trx3 are visible in full.
TEST(RcpExampleTest, MatchesWorkedExample) {
  RcpExampleReport r = RunRcpExample();
  EXPECT_EQ(r.replica_max.at("Replica 1"), r.ts[4]);
  EXPECT_EQ(r.replica_max.at("Replica 2"), r.ts[5]);
  EXPECT_EQ(r.replica_max.at("Replica 3"), r.ts[3]);
  EXPECT_EQ(r.rcp, r.ts[3]);
  EXPECT_EQ(r.visible, (std::set<int>{1, 2, 3}));
  EXPECT_FALSE(r.replica_logs.at("Replica 1").empty());
}

std::vector<NodeMetrics> BruteForceSkyline(const std::vector<NodeMetrics>& in) {
  std::vector<NodeMetrics> out;
  for (const auto& a : in) {
    if (!a.healthy) continue;
    bool dominated = false;
    for (const auto& b : in)
      if (b.healthy && b.staleness_us <= a.staleness_us && b.latency_us <= a.latency_us &&
          (b.staleness_us < a.staleness_us || b.latency_us < a.latency_us))
        dominated = true;
    if (!dominated) out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const NodeMetrics& a, const NodeMetrics& b) {
    if (a.staleness_us != b.staleness_us) return a.staleness_us < b.staleness_us;
    return a.node < b.node;
  });
  return out;
}

TEST(SkylineTest, SmallCase) {
  auto sky = BuildSkyline({M(1, 0, 100), M(2, 10, 50), M(3, 10, 60), M(4, 20, 50),
                           M(5, 30, 5), M(6, 1, 1, false)});
  std::vector<NodeId> ids;
  for (const auto& m : sky) ids.push_back(m.node);
  EXPECT_EQ(ids, (std::vector<NodeId>{1, 2, 5}));
  EXPECT_TRUE(Dominates(M(0, 1, 1), M(0, 1, 2)));
  EXPECT_FALSE(Dominates(M(0, 1, 1), M(0, 1, 1)));
}

TEST(SkylineTest, MatchesBruteForce) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    size_t n = 1 + rng() % 64;
    uint64_t range = 1 + rng() % 50;  // small ranges force ties
    std::vector<NodeMetrics> in;
    for (size_t i = 0; i < n; ++i)
      in.push_back(M(static_cast<NodeId>(i), rng() % range, rng() % range, rng() % 8 != 0));
    auto got = BuildSkyline(in);
    auto want = BruteForceSkyline(in);
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (size_t i = 0; i < got.size(); ++i) ASSERT_EQ(got[i].node, want[i].node);
  }
}

TEST(NodeSelectTest, PicksFastestWithinBound) {
  ShardCandidates sc;
  sc.shard = 4;
  sc.primary = M(10, 999, 30'000);
  sc.replicas = {M(11, 5'000, 500), M(12, 200, 8'000)};
  ReadRoute any = SelectNodes({sc}, std::nullopt);
  EXPECT_EQ(any.node_for_shard.at(4), 11u);
  EXPECT_FALSE(any.all_primary);
  ReadRoute bounded = SelectNodes({sc}, 1'000);
  EXPECT_EQ(bounded.node_for_shard.at(4), 12u);
  ReadRoute zero = SelectNodes({sc}, 0);
  EXPECT_EQ(zero.node_for_shard.at(4), 10u);
  EXPECT_TRUE(zero.all_primary);
  // Nothing within 100 us but the primary.
  EXPECT_EQ(SelectNodes({sc}, 100).node_for_shard.at(4), 10u);
}

TEST(NodeSelectTest, UnavailableShardThrows) {
  ShardCandidates sc;
  sc.primary = M(10, 0, 1, false);
  sc.replicas = {M(11, 5'000, 500)};
  EXPECT_EQ(SelectNodes({sc}, std::nullopt).node_for_shard.at(0), 11u);
  EXPECT_THROW(SelectNodes({sc}, 100), ShardUnavailableError);
}

TEST(StalenessTest, ClockAndRateEstimates) {
  EXPECT_EQ(StalenessFromClock(1'000, 400), 600u);
  EXPECT_EQ(StalenessFromClock(400, 1'000), 0u);
  // 300 timestamps behind at 0.5 per us is 600 us.
  EXPECT_EQ(StalenessFromRate(1'300, 1'000, 0.5), 600u);
  EXPECT_EQ(StalenessFromRate(1'300, 1'000, 0.0), 0u);
  EXPECT_EQ(StalenessFromRate(900, 1'000, 1.0), 0u);
}

TEST(StalenessTest, IssueRateOverWindow) {
  IssueRateTracker t(1'000);
  EXPECT_EQ(t.Rate(0), 0.0);
  for (SimTime now = 0; now <= 5'000; now += 100) t.Observe(now, now / 10);
  EXPECT_NEAR(t.Rate(5'000), 0.1, 1e-9);
  EXPECT_EQ(t.last_counter(), 500u);
  // Counter regressions are ignored.
  t.Observe(5'100, 3);
  EXPECT_EQ(t.last_counter(), 500u);
}

TEST(DdlGateTest, GlobalThenPerTable) {
  std::map<std::string, Timestamp> ddl = {{"t1", Ts(50)}, {"t2", Ts(200)}};
  EXPECT_EQ(DdlGate({"t2"}, Ts(300), ddl, Ts(200)), DdlDecision::kAllowGlobal);
  EXPECT_EQ(DdlGate({"t1", "t3"}, Ts(100), ddl, Ts(200)), DdlDecision::kAllowTables);
  EXPECT_EQ(DdlGate({"t2"}, Ts(100), ddl, Ts(200)), DdlDecision::kDeny);
  EXPECT_EQ(DdlGate({"t1"}, Ts(50), ddl, Ts(200)), DdlDecision::kDeny);
  EXPECT_FALSE(Allowed(DdlDecision::kDeny));
}

}  // namespace
}  // namespace geosim
