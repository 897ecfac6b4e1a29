#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "geosim/sim/simulator.h"

namespace geosim {

class NodeCrashedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClockConfig {
  uint64_t sync_interval_us = 1000;
  uint64_t sync_roundtrip_us = 60;
  uint64_t drift_bound_ppm = 200;
  // Added to simulated true time to form clock values, so GClock values
  // can live far above GTM counters in the shared timestamp space.
  uint64_t epoch_us = 0;
};

struct ClockReading {
  uint64_t t_clock = 0;
  uint64_t t_err = 0;

  uint64_t upper() const { return t_clock + t_err; }
  uint64_t lower() const { return t_clock >= t_err ? t_clock - t_err : 0; }
};

// Per-node drifting clocks synchronized against one time device per region.
//
// A node's clock carries a fixed synchronization bias (|bias| <= T_sync/2,
// drawn once) plus drift accumulated since the last successful sync. The
// reported error is T_err = T_sync + ceil(drift_bound * elapsed / 10^6).
// Readings never go backwards: when a sync would step a clock back, the
// previous value is held and the error widens by the held amount so the
// [t_clock - t_err, t_clock + t_err] envelope still contains true time.
class ClockService {
 public:
  ClockService(Simulator& sim, ClockConfig config);

  ClockService(const ClockService&) = delete;
  ClockService& operator=(const ClockService&) = delete;

  void AddTimeDevice(RegionId region, NodeId device);
  // Draw sites: drift uniform in [-bound, +bound] ppm, then bias uniform in
  // [-T_sync/2, +T_sync/2] us.
  void AddNode(NodeId node);
  void AddNode(NodeId node, int64_t drift_ppm, int64_t bias_us);
  bool has_clock(NodeId node) const { return clocks_.count(node) != 0; }

  // Throws NodeCrashedError when the node is down.
  ClockReading Read(NodeId node);
  // False once a clock_desync fault hit the node; cleared by node recovery.
  bool healthy(NodeId node) const;

  // One synchronization round; reschedules itself every sync interval.
  void SyncTick(NodeId node);

  // Runs fn (as an event owned by node) once t_clock - t_err > value.
  void WaitUntilLowerBoundExceeds(NodeId node, uint64_t value, std::function<void()> fn);
  // Runs fn once t_clock > value.
  void WaitUntilClockExceeds(NodeId node, uint64_t value, std::function<void()> fn);

  uint64_t true_value() const { return config_.epoch_us + sim_.now(); }
  const ClockConfig& config() const { return config_; }

  // Audit of every healthy reading against true time.
  uint64_t readings() const { return readings_; }
  uint64_t envelope_violations() const { return envelope_violations_; }

 private:
  struct DriftingClock {
    int64_t bias_us = 0;
    int64_t drift_ppm = 0;
    SimTime last_sync_at = 0;
    int64_t fault_offset_us = 0;
    int64_t fault_drift_ppm = 0;
    SimTime fault_since = 0;
    bool desynced = false;
    uint64_t last_returned = 0;
  };

  void OnFault(const FaultSpec& spec);
  void ScheduleTick(NodeId node);
  void Recheck(NodeId node, uint64_t value, bool lower_bound, std::function<void()> fn);

  Simulator& sim_;
  ClockConfig config_;
  std::map<RegionId, NodeId> devices_;
  std::unordered_map<NodeId, DriftingClock> clocks_;
  uint64_t readings_ = 0;
  uint64_t envelope_violations_ = 0;
};

}  // namespace geosim
