#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "geosim/sim/simulator.h"
#include "geosim/txn/timestamp.h"

namespace geosim {

class TransitionInProgressError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class TransitionDirection { kGtmToGClock, kGClockToGtm };

const char* DirectionName(TransitionDirection d);
TransitionDirection ParseDirection(const std::string& name);

enum class TsPurpose : uint8_t { kSnapshot, kCommit };

struct TsRequest {
  TsPurpose purpose = TsPurpose::kSnapshot;
  // Mode of the requesting CN right now, and of the transaction at begin.
  TsMode cn_mode = TsMode::kGtm;
  TsMode begun_mode = TsMode::kGtm;
  // DUAL requests carry the locally obtained GClock timestamp.
  std::optional<ClockReading> gclock;
  uint32_t coordinator = 0;
  uint64_t local_seq = 0;
};

struct TsGrant {
  bool aborted = false;  // stale GTM-mode commit after the switch to GClock
  Timestamp ts;
  uint64_t wait_us = 0;  // commit wait the requester must observe
  uint64_t counter = 0;  // counter after the grant
};

struct TransitionState {
  TsMode gtms_mode = TsMode::kGtm;
  std::map<NodeId, TsMode> cn_mode;
  uint64_t max_err_observed = 0;
  SimTime dual_entered_at = 0;
  std::set<NodeId> acks_pending;
  std::optional<TransitionDirection> direction;
  uint64_t gtms_counter = 0;
  uint64_t gtms_max_gclock_seen = 0;
};

// Central timestamp authority plus the GTMS side of the mode transition.
// Networking lives elsewhere; this class only holds the state machine.
class GtmServer {
 public:
  explicit GtmServer(TsMode initial = TsMode::kGtm, bool dual_wait_enabled = true);

  void RegisterCn(NodeId cn, TsMode mode);

  // Counter + 1; in DUAL mode the counter is first raised to the largest
  // GClock value seen.
  Timestamp NextGtm(uint32_t coordinator = 0, uint64_t local_seq = 0);
  // max(counter, gclock) + 1 and the GClock error bound is recorded.
  Timestamp NextDual(const ClockReading& gclock, uint32_t coordinator = 0,
                     uint64_t local_seq = 0);
  void ObserveGClock(uint64_t value, uint64_t err);

  TsGrant Serve(const TsRequest& request);

  // Moves the GTMS to DUAL and returns the CNs that must acknowledge.
  // Throws TransitionInProgressError.
  std::vector<NodeId> StartTransition(TransitionDirection direction, SimTime now);
  // Returns true once every CN acknowledged DUAL.
  bool OnDualAck(NodeId cn, uint64_t max_gclock_issued, std::optional<ClockReading> reading);
  // Time the GTMS must stay in DUAL after the last ack.
  uint64_t RequiredDualDwellUs() const;
  // GTMS enters the target mode; returns the CNs to notify.
  std::vector<NodeId> EnterTargetMode();
  // Returns true when the transition completed.
  bool OnTargetAck(NodeId cn);

  bool transition_in_progress() const { return state_.direction.has_value(); }
  bool awaiting_target_acks() const { return awaiting_target_acks_; }
  TsMode mode() const { return state_.gtms_mode; }
  uint64_t counter() const { return state_.gtms_counter; }
  const TransitionState& state() const { return state_; }
  bool dual_wait_enabled() const { return dual_wait_enabled_; }

  // Drops a crashed CN from the pending acks; true when none remain. In the
  // target phase that also completes the transition.
  bool ForgetCn(NodeId cn);
  // Adopts a recovering CN into the current mode; returns that mode.
  TsMode AdoptCn(NodeId cn);

 private:
  TransitionState state_;
  bool dual_wait_enabled_;
  bool awaiting_target_acks_ = false;
};

}  // namespace geosim
