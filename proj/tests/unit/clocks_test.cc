#include <gtest/gtest.h>

#include <random>

#include "geosim/clocks/clock_service.h"

namespace geosim {
namespace {

struct Rig {
  explicit Rig(ClockConfig cfg, uint64_t seed = 1)
      : sim(LatencyMatrix::Uniform(1, 100, 100), seed), clocks(sim, cfg) {
    device = sim.AddNode(0, "clock0");
    node = sim.AddNode(0, "cn0");
    clocks.AddTimeDevice(0, device);
  }
  Simulator sim;
  ClockService clocks;
  NodeId device;
  NodeId node;
};

ClockConfig Cfg(uint64_t sync_interval, uint64_t roundtrip, uint64_t ppm) {
  ClockConfig c;
  c.sync_interval_us = sync_interval;
  c.sync_roundtrip_us = roundtrip;
  c.drift_bound_ppm = ppm;
  c.epoch_us = 1'000'000'000;
  return c;
}

TEST(ClockServiceTest, ErrorGrowsWithDriftBoundSinceSync) {
  Rig r(Cfg(0, 60, 200));
  r.clocks.AddNode(r.node, 0, 0);
  EXPECT_EQ(r.clocks.Read(r.node).t_err, 60u);
  r.sim.RunUntil(1'000'000);
  // 200 ppm over one second: 200 us on top of the sync error.
  EXPECT_EQ(r.clocks.Read(r.node).t_err, 260u);
  r.sim.RunUntil(1'000'001);
  // ceil(200 * 1000001 / 1e6) = 201
  EXPECT_EQ(r.clocks.Read(r.node).t_err, 261u);
}

TEST(ClockServiceTest, BiasAndDriftShiftReading) {
  Rig r(Cfg(0, 60, 200));
  r.clocks.AddNode(r.node, 100, -25);
  r.sim.RunUntil(500'000);
  ClockReading c = r.clocks.Read(r.node);
  EXPECT_EQ(c.t_clock, 1'000'000'000u + 500'000u - 25u + 50u);
}

// Random clocks inside the configured bounds always contain true time.
TEST(ClockServiceTest, EnvelopeContainsTrueTime) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rig r(Cfg(1000, 60, 200), seed);
    std::vector<NodeId> nodes;
    for (int i = 0; i < 8; ++i) {
      nodes.push_back(r.sim.AddNode(0, "n" + std::to_string(i)));
      r.clocks.AddNode(nodes.back());
    }
    std::mt19937_64 rng(seed);
    for (int step = 0; step < 2000; ++step) {
      r.sim.RunUntil(r.sim.now() + rng() % 700);
      for (NodeId n : nodes) {
        ClockReading c = r.clocks.Read(n);
        uint64_t truth = r.clocks.true_value();
        ASSERT_LE(c.lower(), truth);
        ASSERT_GE(c.upper(), truth);
      }
    }
    EXPECT_EQ(r.clocks.envelope_violations(), 0u);
    EXPECT_GT(r.clocks.readings(), 0u);
  }
}

TEST(ClockServiceTest, ReadingsNeverGoBackwards) {
  // Fast clock: every sync would step it back by the accumulated drift.
  Rig r(Cfg(10'000, 60, 200));
  r.clocks.AddNode(r.node, 200, 30);
  uint64_t last = 0;
  for (int i = 0; i < 5000; ++i) {
    r.sim.RunUntil(r.sim.now() + 37);
    ClockReading c = r.clocks.Read(r.node);
    ASSERT_GE(c.t_clock, last);
    last = c.t_clock;
    uint64_t truth = r.clocks.true_value();
    ASSERT_LE(c.lower(), truth);
    ASSERT_GE(c.upper(), truth);
  }
}

TEST(ClockServiceTest, MissingDeviceWidensError) {
  Rig r(Cfg(1000, 60, 100));
  r.clocks.AddNode(r.node, 0, 0);
  FaultSpec crash;
  crash.kind = FaultKind::kNodeCrash;
  crash.target = r.device;
  crash.at = 0;
  r.sim.InjectFault(crash);
  r.sim.RunUntil(2'000'000);
  // No successful sync for 2 s: 60 + 100 ppm * 2 s.
  EXPECT_EQ(r.clocks.Read(r.node).t_err, 260u);
}

TEST(ClockServiceTest, LowerBoundWaitEndsAfterTrueTimePassesValue) {
  for (int64_t bias : {-30, 0, 30}) {
    Rig r(Cfg(1000, 60, 200));
    r.clocks.AddNode(r.node, 150, bias);
    r.sim.RunUntil(10'000);
    uint64_t target = r.clocks.Read(r.node).upper();
    bool done = false;
    uint64_t true_at_done = 0;
    r.clocks.WaitUntilLowerBoundExceeds(r.node, target, [&] {
      done = true;
      true_at_done = r.clocks.true_value();
      EXPECT_GT(r.clocks.Read(r.node).lower(), target);
    });
    r.sim.RunUntil(1'000'000);
    ASSERT_TRUE(done);
    EXPECT_GT(true_at_done, target);
    // Waiting out 2 x t_err plus the drift term should not take much longer.
    EXPECT_LT(true_at_done, target + 300);
  }
}

TEST(ClockServiceTest, ClockWaitUsesRawValue) {
  Rig r(Cfg(0, 60, 0));
  r.clocks.AddNode(r.node, 0, 0);
  uint64_t target = r.clocks.Read(r.node).t_clock + 500;
  SimTime done_at = 0;
  r.clocks.WaitUntilClockExceeds(r.node, target, [&] { done_at = r.sim.now(); });
  r.sim.RunUntil(10'000);
  EXPECT_EQ(done_at, 501u);
}

TEST(ClockServiceTest, DesyncMarksUnhealthyUntilRecovery) {
  Rig r(Cfg(1000, 60, 200));
  r.clocks.AddNode(r.node, 0, 0);
  FaultSpec f;
  f.kind = FaultKind::kClockDesync;
  f.target = r.node;
  f.at = 100;
  f.clock_offset_us = 50'000;
  r.sim.InjectFault(f);
  r.sim.RunUntil(200);
  EXPECT_FALSE(r.clocks.healthy(r.node));
  uint64_t before = r.clocks.readings();
  ClockReading c = r.clocks.Read(r.node);
  EXPECT_GT(c.lower(), r.clocks.true_value());
  // Unhealthy readings are not part of the envelope audit.
  EXPECT_EQ(r.clocks.readings(), before);
  EXPECT_EQ(r.clocks.envelope_violations(), 0u);

  FaultSpec crash;
  crash.kind = FaultKind::kNodeCrash;
  crash.target = r.node;
  crash.at = 300;
  r.sim.InjectFault(crash);
  FaultSpec rec = crash;
  rec.kind = FaultKind::kNodeRecover;
  rec.at = 400;
  r.sim.InjectFault(rec);
  r.sim.RunUntil(350);
  EXPECT_THROW(r.clocks.Read(r.node), NodeCrashedError);
  r.sim.RunUntil(500);
  EXPECT_TRUE(r.clocks.healthy(r.node));
}

}  // namespace
}  // namespace geosim
