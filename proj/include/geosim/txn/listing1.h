#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geosim/sim/simulator.h"
#include "geosim/txn/timestamp.h"

namespace geosim {

struct Listing1Params {
  // Mode the cluster starts in. Only "gtm" exercises the GTM->GClock path;
  // a GClock-only cluster never has GTM transactions to wait for.
  TsMode initial_mode = TsMode::kGtm;
  // GTM transactions committing while the GTMS is in DUAL wait 2 x max_err.
  bool enable_wait = true;
  // One-way delay between nodes is drawn uniformly from this range.
  uint64_t min_delay_us = 2;
  uint64_t max_delay_us = 40;
  // Scripted pause between consecutive steps, drawn from [0, max_gap_us].
  uint64_t max_gap_us = 30;
  uint64_t sync_roundtrip_us = 60;
  uint64_t drift_bound_ppm = 200;
  uint64_t epoch_us = 1'000'000'000;
};

struct AnomalyReport {
  bool applicable = true;
  bool anomaly = false;
  Timestamp ts1;  // Trx1 commit timestamp (DUAL, issued by the GTMS)
  Timestamp ts2;  // Trx2 invocation timestamp (GClock, Node2)
  Timestamp ts3;  // large GClock timestamp sent by Node3
  uint64_t wait_us = 0;
  SimTime trx1_visible_at = 0;
  SimTime trx2_invoked_at = 0;
  std::string trx2_read;
  std::string description;
  std::vector<std::string> steps;
};

// Replays the twelve-step interleaving in which a GTM transaction commits
// through a DUAL GTMS while another CN already issues GClock timestamps.
AnomalyReport RunListing1Scenario(const Listing1Params& params, uint64_t seed);

}  // namespace geosim
