#include "geosim/txn/listing1.h"

#include <map>
#include <random>

#include "geosim/clocks/clock_service.h"
#include "geosim/txn/gtm_server.h"

namespace geosim {

namespace {

constexpr size_t kMsgBytes = 64;

struct Script {
  Simulator* sim;
  ClockService* clocks;
  GtmServer* gtms;
  const Listing1Params* params;
  NodeId gtm, node1, node2, node3;
  AnomalyReport* report;
  // Single register x: committed versions keyed by commit timestamp.
  std::map<Timestamp, std::string> x;

  SimTime Gap() { return static_cast<SimTime>(sim->UniformInt(0, params->max_gap_us)); }

  void Log(const std::string& who, const std::string& what) {
    report->steps.push_back("t=" + std::to_string(sim->now()) + " " + who + " " + what);
  }

  std::string ReadAt(const Timestamp& snapshot) const {
    auto it = x.upper_bound(snapshot);
    if (it == x.begin()) return "";
    return std::prev(it)->second;
  }
};

}  // namespace

AnomalyReport RunListing1Scenario(const Listing1Params& params, uint64_t seed) {
  AnomalyReport report;
  if (params.initial_mode != TsMode::kGtm) {
    report.applicable = false;
    report.description = "no GTM transactions exist; nothing to order across modes";
    return report;
  }

  std::mt19937_64 setup(seed);
  std::uniform_int_distribution<uint64_t> delay_dist(params.min_delay_us, params.max_delay_us);
  uint64_t delay = delay_dist(setup);

  LatencyMatrix lat = LatencyMatrix::Uniform(1, delay, delay);
  lat.jitter_fraction = 0.2;
  Simulator sim(lat, seed);
  ClockConfig cc;
  cc.sync_roundtrip_us = params.sync_roundtrip_us;
  cc.drift_bound_ppm = params.drift_bound_ppm;
  cc.epoch_us = params.epoch_us;
  ClockService clocks(sim, cc);
  GtmServer gtms(TsMode::kGtm, params.enable_wait);

  Script s{&sim, &clocks, &gtms, &params, 0, 0, 0, 0, &report, {}};
  NodeId device = sim.AddNode(0, "time0");
  clocks.AddTimeDevice(0, device);
  s.gtm = sim.AddNode(0, "gtm");
  s.node1 = sim.AddNode(0, "node1");
  s.node2 = sim.AddNode(0, "node2");
  s.node3 = sim.AddNode(0, "node3");
  int64_t bound = static_cast<int64_t>(params.drift_bound_ppm);
  int64_t half = static_cast<int64_t>(params.sync_roundtrip_us / 2);
  clocks.AddNode(s.node1);
  // Node3 runs ahead and Node2 behind, both within the synchronization bound.
  clocks.AddNode(s.node2, sim.UniformInt(-bound, bound), sim.UniformInt(-half, 0));
  clocks.AddNode(s.node3, sim.UniformInt(-bound, bound), sim.UniformInt(0, half));
  for (NodeId cn : {s.node1, s.node2, s.node3}) gtms.RegisterCn(cn, TsMode::kGtm);

  Timestamp initial;
  s.x[initial] = "v0";
  Script* sp = &s;

  // Step 11/12: Trx2 starts on Node2 in GClock mode and reads x.
  auto trx2 = [sp] {
    ClockReading r = sp->clocks->Read(sp->node2);
    Timestamp ts2;
    ts2.value = GClockValue(r);
    ts2.err = r.t_err;
    ts2.mode = TsMode::kGClock;
    ts2.coordinator = 2;
    ts2.local_seq = 1;
    sp->report->ts2 = ts2;
    sp->report->trx2_invoked_at = sp->sim->now();
    sp->Log("Node2", "Trx2 starts with timestamp ts2=" + ts2.ToString());
    sp->report->trx2_read = sp->ReadAt(ts2);
    if (sp->report->trx2_read != "trx1") {
      sp->report->anomaly = true;
      sp->Log("", "Trx2 cannot see Trx1's committed update");
    } else {
      sp->Log("", "Trx2 sees Trx1's committed update");
    }
  };

  // Steps 9/10: Trx1 on Node1 (begun in GTM mode, Node1 now DUAL) asks the
  // GTMS for a DUAL commit timestamp and commits.
  auto trx1_commit = [sp, trx2] {
    TsRequest req;
    req.purpose = TsPurpose::kCommit;
    req.cn_mode = TsMode::kDual;
    req.begun_mode = TsMode::kGtm;
    req.gclock = sp->clocks->Read(sp->node1);
    req.coordinator = 1;
    req.local_seq = 1;
    sp->sim->Send(sp->node1, sp->gtm, kMsgBytes, [sp, req, trx2] {
      TsGrant g = sp->gtms->Serve(req);
      sp->Log("GTMS", "issues ts1=" + g.ts.ToString() + " wait=" + std::to_string(g.wait_us));
      sp->sim->Send(sp->gtm, sp->node1, kMsgBytes, [sp, g, trx2] {
        sp->report->ts1 = g.ts;
        sp->report->wait_us = g.wait_us;
        sp->Log("Node1", "Trx1 gets DUAL timestamp ts1=" + g.ts.ToString());
        sp->sim->Schedule(g.wait_us, [sp, g, trx2] {
          sp->x[g.ts] = "trx1";
          sp->report->trx1_visible_at = sp->sim->now();
          sp->Log("Node1", "commit Trx1");
          sp->sim->Schedule(sp->Gap(), trx2, sp->node2, "listing1_trx2");
        }, sp->node1, "listing1_commit");
      });
    });
  };

  // Steps 7/8: Node3 sends a large GClock timestamp; the GTMS raises its counter.
  auto send_ts3 = [sp, trx1_commit] {
    TsRequest req;
    req.purpose = TsPurpose::kCommit;
    req.cn_mode = TsMode::kDual;
    req.begun_mode = TsMode::kDual;
    req.gclock = sp->clocks->Read(sp->node3);
    req.coordinator = 3;
    req.local_seq = 1;
    Timestamp ts3;
    ts3.value = GClockValue(*req.gclock);
    ts3.err = req.gclock->t_err;
    ts3.mode = TsMode::kGClock;
    ts3.coordinator = 3;
    ts3.local_seq = 1;
    sp->report->ts3 = ts3;
    sp->Log("Node3", "send large GClock timestamp ts3=" + ts3.ToString() + " to GTMS");
    sp->sim->Send(sp->node3, sp->gtm, kMsgBytes, [sp, req, trx1_commit] {
      sp->gtms->Serve(req);
      sp->Log("GTMS", "raise internal timestamp to " + std::to_string(sp->gtms->counter()));
      sp->sim->Schedule(sp->Gap(), trx1_commit, sp->node1, "listing1_trx1");
    });
  };

  auto ack_dual = [sp](NodeId cn, const char* name) {
    ClockReading r = sp->clocks->Read(cn);
    sp->Log(name, "GTM mode = DUAL mode");
    sp->sim->Send(cn, sp->gtm, kMsgBytes, [sp, cn, r] { sp->gtms->OnDualAck(cn, 0, r); });
  };

  SimTime t = 100;
  sim.ScheduleAt(t, [sp] {
    sp->gtms->StartTransition(TransitionDirection::kGtmToGClock, sp->sim->now());
    sp->Log("GTMS", "running in DUAL mode");
  }, s.gtm, "listing1_step");
  // Trx1 began in GTM mode before the switch reached Node1.
  t += s.Gap();
  sim.ScheduleAt(t, [sp] {
    sp->Log("Node1", "running Trx1 in GTM mode");
  }, s.node1, "listing1_step");
  t += s.Gap();
  sim.ScheduleAt(t, [ack_dual, sp] { ack_dual(sp->node2, "Node2"); }, s.node2, "listing1_step");
  t += s.Gap();
  sim.ScheduleAt(t, [ack_dual, sp] { ack_dual(sp->node3, "Node3"); }, s.node3, "listing1_step");
  t += s.Gap();
  sim.ScheduleAt(t, [ack_dual, sp] { ack_dual(sp->node1, "Node1"); }, s.node1, "listing1_step");
  t += s.Gap();
  sim.ScheduleAt(t, [sp] { sp->Log("Node2", "DUAL mode = GClock mode"); }, s.node2,
                 "listing1_step");
  t += s.Gap();
  sim.ScheduleAt(t, send_ts3, s.node3, "listing1_step");

  sim.RunUntil(100'000);
  sim.Finish();

  if (report.anomaly) {
    report.description = "Trx2 started after Trx1 committed but ts2 " + report.ts2.ToString() +
                         " < ts1 " + report.ts1.ToString() +
                         "; Trx2 cannot see Trx1's committed update";
  } else {
    report.description = "Trx2 observes Trx1 (ts2 " + report.ts2.ToString() + " >= ts1 " +
                         report.ts1.ToString() + ")";
  }
  return report;
}

}  // namespace geosim
