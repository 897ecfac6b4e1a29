#include <gtest/gtest.h>

#include <algorithm>

#include "geosim/txn/gtm_server.h"
#include "geosim/txn/listing1.h"
#include "geosim/txn/timestamp.h"

namespace geosim {
namespace {

ClockReading Reading(uint64_t clock, uint64_t err) {
  ClockReading r;
  r.t_clock = clock;
  r.t_err = err;
  return r;
}

TEST(TimestampTest, Formulas) {
  // TS_GClock = T_clock + T_err
  EXPECT_EQ(GClockValue(Reading(1'000'000, 60)), 1'000'060u);
  // TS_GTM = TS_GTM + 1
  EXPECT_EQ(GtmIncrement(41), 42u);
  // TS_DUAL = max(TS_GTM, TS_GClock) + 1
  EXPECT_EQ(DualValue(500, 900), 901u);
  EXPECT_EQ(DualValue(900, 500), 901u);
}

TEST(TimestampTest, OrderingIgnoresErrorAndMode) {
  Timestamp a{10, 5, TsMode::kGClock, 1, 1};
  Timestamp b{10, 0, TsMode::kGtm, 1, 1};
  EXPECT_EQ(a, b);
  Timestamp c{10, 0, TsMode::kGtm, 2, 0};
  Timestamp d{10, 0, TsMode::kGtm, 2, 1};
  Timestamp e{11, 0, TsMode::kGtm, 0, 0};
  EXPECT_LT(b, c);
  EXPECT_LT(c, d);
  EXPECT_LT(d, e);
  EXPECT_LT(kMinTimestamp, b);
}

TEST(TimestampTest, ParseModeNames) {
  EXPECT_EQ(ParseTsMode("gtm"), TsMode::kGtm);
  EXPECT_EQ(ParseTsMode("gclock"), TsMode::kGClock);
  EXPECT_EQ(ParseTsMode("dual"), TsMode::kDual);
  EXPECT_THROW(ParseTsMode("GPS"), std::invalid_argument);
  EXPECT_STREQ(TsModeName(TsMode::kDual), "dual");
}

TEST(GtmServerTest, CounterIsStrictlyIncreasing) {
  GtmServer g;
  uint64_t last = 0;
  for (int i = 0; i < 1000; ++i) {
    Timestamp t = g.NextGtm();
    EXPECT_EQ(t.value, last + 1);
    last = t.value;
  }
}

TEST(GtmServerTest, DualExceedsBothSources) {
  GtmServer g;
  for (int i = 0; i < 10; ++i) g.NextGtm();
  Timestamp t = g.NextDual(Reading(1'000'000'000, 40));
  EXPECT_EQ(t.value, 1'000'000'041u);
  EXPECT_EQ(t.err, 40u);
  EXPECT_EQ(t.mode, TsMode::kDual);
  // A smaller GClock value still yields counter + 1.
  Timestamp u = g.NextDual(Reading(5, 0));
  EXPECT_EQ(u.value, t.value + 1);
  EXPECT_EQ(g.state().max_err_observed, 40u);
}

TEST(GtmServerTest, GtmToGClockStateMachine) {
  GtmServer g(TsMode::kGtm);
  g.RegisterCn(1, TsMode::kGtm);
  g.RegisterCn(2, TsMode::kGtm);
  auto targets = g.StartTransition(TransitionDirection::kGtmToGClock, 100);
  EXPECT_EQ(targets.size(), 2u);
  EXPECT_EQ(g.mode(), TsMode::kDual);
  EXPECT_THROW(g.StartTransition(TransitionDirection::kGtmToGClock, 100),
               TransitionInProgressError);
  EXPECT_FALSE(g.OnDualAck(1, 0, Reading(2'000, 30)));
  EXPECT_TRUE(g.OnDualAck(2, 0, Reading(2'000, 50)));
  EXPECT_EQ(g.RequiredDualDwellUs(), 100u);
  auto notify = g.EnterTargetMode();
  EXPECT_EQ(notify.size(), 2u);
  EXPECT_EQ(g.mode(), TsMode::kGClock);
  EXPECT_TRUE(g.awaiting_target_acks());
  EXPECT_FALSE(g.OnTargetAck(1));
  EXPECT_TRUE(g.OnTargetAck(2));
  EXPECT_FALSE(g.transition_in_progress());
  EXPECT_EQ(g.state().cn_mode.at(1), TsMode::kGClock);
}

TEST(GtmServerTest, GClockToGtmSeedsCounterAboveIssuedGClock) {
  GtmServer g(TsMode::kGClock);
  g.RegisterCn(1, TsMode::kGClock);
  EXPECT_THROW(g.StartTransition(TransitionDirection::kGtmToGClock, 0), TransitionInProgressError);
  g.StartTransition(TransitionDirection::kGClockToGtm, 0);
  EXPECT_TRUE(g.OnDualAck(1, 5'000'000, std::nullopt));
  EXPECT_EQ(g.RequiredDualDwellUs(), 0u);
  g.EnterTargetMode();
  EXPECT_EQ(g.mode(), TsMode::kGtm);
  EXPECT_GT(g.NextGtm().value, 5'000'000u);
  EXPECT_TRUE(g.OnTargetAck(1));
}

TEST(GtmServerTest, CommitWaitForGtmTransactionsInDual) {
  GtmServer g(TsMode::kGtm, true);
  g.RegisterCn(1, TsMode::kGtm);
  g.RegisterCn(2, TsMode::kGtm);
  g.StartTransition(TransitionDirection::kGtmToGClock, 0);
  g.OnDualAck(2, 0, Reading(10'000, 70));

  TsRequest gtm_commit;
  gtm_commit.purpose = TsPurpose::kCommit;
  gtm_commit.cn_mode = TsMode::kGtm;
  gtm_commit.begun_mode = TsMode::kGtm;
  TsGrant grant = g.Serve(gtm_commit);
  EXPECT_FALSE(grant.aborted);
  EXPECT_EQ(grant.wait_us, 140u);  // 2 x max_err

  TsRequest snapshot = gtm_commit;
  snapshot.purpose = TsPurpose::kSnapshot;
  EXPECT_EQ(g.Serve(snapshot).wait_us, 0u);

  TsRequest dual_commit;
  dual_commit.purpose = TsPurpose::kCommit;
  dual_commit.cn_mode = TsMode::kDual;
  dual_commit.begun_mode = TsMode::kDual;
  dual_commit.gclock = Reading(10'100, 70);
  TsGrant d = g.Serve(dual_commit);
  EXPECT_EQ(d.wait_us, 0u);
  EXPECT_EQ(d.ts.mode, TsMode::kDual);
  EXPECT_GT(d.ts.value, 10'170u);

  // A transaction begun in GTM mode that commits through a DUAL CN.
  dual_commit.begun_mode = TsMode::kGtm;
  EXPECT_EQ(g.Serve(dual_commit).wait_us, 140u);
}

TEST(GtmServerTest, NoWaitWhenDisabled) {
  GtmServer g(TsMode::kGtm, false);
  g.RegisterCn(1, TsMode::kGtm);
  g.StartTransition(TransitionDirection::kGtmToGClock, 0);
  g.OnDualAck(1, 0, Reading(10'000, 70));
  TsRequest r;
  r.purpose = TsPurpose::kCommit;
  EXPECT_EQ(g.Serve(r).wait_us, 0u);
}

TEST(GtmServerTest, StaleGtmRequestsAbortAfterSwitch) {
  GtmServer g(TsMode::kGClock);
  TsRequest r;
  r.purpose = TsPurpose::kCommit;
  r.cn_mode = TsMode::kGtm;
  EXPECT_TRUE(g.Serve(r).aborted);
  r.cn_mode = TsMode::kGClock;
  EXPECT_TRUE(g.Serve(r).aborted);
  // DUAL requests stay serviceable.
  r.cn_mode = TsMode::kDual;
  r.gclock = Reading(100, 5);
  EXPECT_FALSE(g.Serve(r).aborted);
}

TEST(GtmServerTest, ForgetCnCompletesTargetPhase) {
  GtmServer g(TsMode::kGtm);
  g.RegisterCn(1, TsMode::kGtm);
  g.RegisterCn(2, TsMode::kGtm);
  g.StartTransition(TransitionDirection::kGtmToGClock, 0);
  EXPECT_FALSE(g.ForgetCn(2));
  EXPECT_TRUE(g.OnDualAck(1, 0, std::nullopt));
  g.EnterTargetMode();
  g.OnTargetAck(1);
  EXPECT_TRUE(g.ForgetCn(2));
  EXPECT_FALSE(g.transition_in_progress());
  EXPECT_EQ(g.AdoptCn(2), TsMode::kGClock);
}

TEST(Listing1Test, AnomalyWithoutWait) {
  Listing1Params p;
  p.enable_wait = false;
  int anomalies = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    AnomalyReport r = RunListing1Scenario(p, seed);
    ASSERT_TRUE(r.applicable);
    if (!r.anomaly) continue;
    ++anomalies;
    EXPECT_LT(r.ts2, r.ts1);
    EXPECT_GT(r.trx2_invoked_at, r.trx1_visible_at);
    EXPECT_NE(r.description.find("Trx2 cannot see Trx1's committed update"), std::string::npos);
    EXPECT_FALSE(r.steps.empty());
  }
  EXPECT_GE(anomalies, 1);
}

TEST(Listing1Test, WaitRemovesAnomaly) {
  Listing1Params p;
  p.enable_wait = true;
  for (uint64_t seed = 1; seed <= 300; ++seed) {
    AnomalyReport r = RunListing1Scenario(p, seed);
    ASSERT_FALSE(r.anomaly) << "seed " << seed << ": " << r.description;
    EXPECT_GT(r.wait_us, 0u);
  }
}

TEST(Listing1Test, GClockOnlyClusterIsNotApplicable) {
  Listing1Params p;
  p.initial_mode = TsMode::kGClock;
  p.enable_wait = false;
  AnomalyReport r = RunListing1Scenario(p, 1);
  EXPECT_FALSE(r.applicable);
  EXPECT_FALSE(r.anomaly);
}

}  // namespace
}  // namespace geosim
