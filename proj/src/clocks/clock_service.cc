#include "geosim/clocks/clock_service.h"

#include <cmath>

namespace geosim {

namespace {

int64_t RoundPpm(int64_t ppm, uint64_t elapsed_us) {
  return std::llround(static_cast<double>(ppm) * static_cast<double>(elapsed_us) / 1e6);
}

uint64_t CeilPpm(uint64_t ppm, uint64_t elapsed_us) {
  return (ppm * elapsed_us + 999'999) / 1'000'000;
}

}  // namespace

ClockService::ClockService(Simulator& sim, ClockConfig config) : sim_(sim), config_(config) {
  sim_.AddFaultListener([this](const FaultSpec& spec) { OnFault(spec); });
}

void ClockService::AddTimeDevice(RegionId region, NodeId device) { devices_[region] = device; }

void ClockService::AddNode(NodeId node) {
  int64_t bound = static_cast<int64_t>(config_.drift_bound_ppm);
  int64_t drift = sim_.UniformInt(-bound, bound);
  int64_t half = static_cast<int64_t>(config_.sync_roundtrip_us / 2);
  int64_t bias = sim_.UniformInt(-half, half);
  AddNode(node, drift, bias);
}

void ClockService::AddNode(NodeId node, int64_t drift_ppm, int64_t bias_us) {
  DriftingClock c;
  c.drift_ppm = drift_ppm;
  c.bias_us = bias_us;
  c.last_sync_at = sim_.now();
  clocks_[node] = c;
  ScheduleTick(node);
}

void ClockService::ScheduleTick(NodeId node) {
  if (config_.sync_interval_us == 0) return;
  sim_.Schedule(config_.sync_interval_us, [this, node] { SyncTick(node); }, node, "clock_sync");
}

void ClockService::SyncTick(NodeId node) {
  auto it = clocks_.find(node);
  if (it == clocks_.end()) return;
  auto dev = devices_.find(sim_.region_of(node));
  // Without a reachable device the sync is skipped and the drift term grows.
  if (dev != devices_.end() && sim_.alive(dev->second)) it->second.last_sync_at = sim_.now();
  ScheduleTick(node);
}

ClockReading ClockService::Read(NodeId node) {
  if (!sim_.alive(node)) throw NodeCrashedError("clock read on crashed node " + sim_.name_of(node));
  DriftingClock& c = clocks_.at(node);
  SimTime now = sim_.now();
  uint64_t elapsed = now - c.last_sync_at;
  int64_t raw = static_cast<int64_t>(config_.epoch_us + now) + c.bias_us +
                RoundPpm(c.drift_ppm, elapsed);
  if (c.desynced) raw += c.fault_offset_us + RoundPpm(c.fault_drift_ppm, now - c.fault_since);
  if (raw < 0) raw = 0;
  ClockReading r;
  r.t_err = config_.sync_roundtrip_us + CeilPpm(config_.drift_bound_ppm, elapsed);
  r.t_clock = static_cast<uint64_t>(raw);
  if (r.t_clock < c.last_returned) {
    r.t_err += c.last_returned - r.t_clock;
    r.t_clock = c.last_returned;
  }
  c.last_returned = r.t_clock;
  if (!c.desynced) {
    ++readings_;
    uint64_t truth = true_value();
    if (r.lower() > truth || r.upper() < truth) ++envelope_violations_;
  }
  return r;
}

bool ClockService::healthy(NodeId node) const {
  auto it = clocks_.find(node);
  return it != clocks_.end() && !it->second.desynced && sim_.alive(node);
}

void ClockService::OnFault(const FaultSpec& spec) {
  auto it = clocks_.find(spec.target);
  if (it == clocks_.end()) return;
  DriftingClock& c = it->second;
  if (spec.kind == FaultKind::kClockDesync) {
    c.desynced = true;
    c.fault_offset_us += spec.clock_offset_us;
    c.fault_drift_ppm += spec.clock_drift_ppm;
    c.fault_since = sim_.now();
  } else if (spec.kind == FaultKind::kNodeRecover) {
    c.desynced = false;
    c.fault_offset_us = 0;
    c.fault_drift_ppm = 0;
    c.last_sync_at = sim_.now();
    ScheduleTick(spec.target);
  }
}

void ClockService::WaitUntilLowerBoundExceeds(NodeId node, uint64_t value,
                                              std::function<void()> fn) {
  Recheck(node, value, true, std::move(fn));
}

void ClockService::WaitUntilClockExceeds(NodeId node, uint64_t value, std::function<void()> fn) {
  Recheck(node, value, false, std::move(fn));
}

void ClockService::Recheck(NodeId node, uint64_t value, bool lower_bound,
                           std::function<void()> fn) {
  if (!sim_.alive(node)) return;
  ClockReading r = Read(node);
  uint64_t probe = lower_bound ? r.lower() : r.t_clock;
  if (probe > value) {
    sim_.Schedule(0, std::move(fn), node, "clock_wait_done");
    return;
  }
  // The bound advances at nearly one microsecond per microsecond, so this
  // converges in a couple of rounds.
  uint64_t delay = value - probe + 1;
  sim_.Schedule(delay,
                [this, node, value, lower_bound, fn = std::move(fn)]() mutable {
                  Recheck(node, value, lower_bound, std::move(fn));
                },
                node, "clock_wait");
}

}  // namespace geosim
