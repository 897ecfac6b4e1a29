#include "geosim/txn/gtm_server.h"

#include <algorithm>

namespace geosim {

const char* DirectionName(TransitionDirection d) {
  return d == TransitionDirection::kGtmToGClock ? "gtm_to_gclock" : "gclock_to_gtm";
}

TransitionDirection ParseDirection(const std::string& name) {
  if (name == "gtm_to_gclock") return TransitionDirection::kGtmToGClock;
  if (name == "gclock_to_gtm") return TransitionDirection::kGClockToGtm;
  throw std::invalid_argument("unknown transition direction: " + name);
}

GtmServer::GtmServer(TsMode initial, bool dual_wait_enabled)
    : dual_wait_enabled_(dual_wait_enabled) {
  state_.gtms_mode = initial;
}

void GtmServer::RegisterCn(NodeId cn, TsMode mode) { state_.cn_mode[cn] = mode; }

Timestamp GtmServer::NextGtm(uint32_t coordinator, uint64_t local_seq) {
  if (state_.gtms_mode == TsMode::kDual)
    state_.gtms_counter = std::max(state_.gtms_counter, state_.gtms_max_gclock_seen);
  state_.gtms_counter = GtmIncrement(state_.gtms_counter);
  Timestamp ts;
  ts.value = state_.gtms_counter;
  ts.mode = TsMode::kGtm;
  ts.coordinator = coordinator;
  ts.local_seq = local_seq;
  return ts;
}

Timestamp GtmServer::NextDual(const ClockReading& gclock, uint32_t coordinator,
                              uint64_t local_seq) {
  uint64_t g = GClockValue(gclock);
  ObserveGClock(g, gclock.t_err);
  state_.gtms_counter = DualValue(state_.gtms_counter, g);
  Timestamp ts;
  ts.value = state_.gtms_counter;
  ts.err = gclock.t_err;
  ts.mode = TsMode::kDual;
  ts.coordinator = coordinator;
  ts.local_seq = local_seq;
  return ts;
}

void GtmServer::ObserveGClock(uint64_t value, uint64_t err) {
  state_.gtms_max_gclock_seen = std::max(state_.gtms_max_gclock_seen, value);
  state_.max_err_observed = std::max(state_.max_err_observed, err);
}

TsGrant GtmServer::Serve(const TsRequest& req) {
  TsGrant grant;
  bool commit = req.purpose == TsPurpose::kCommit;
  bool gtm_request = req.cn_mode == TsMode::kGtm || !req.gclock;
  if (req.cn_mode == TsMode::kGClock ||
      (state_.gtms_mode == TsMode::kGClock && gtm_request)) {
    // A GTM-mode straggler after the cluster moved to GClock, or a GClock
    // CN that should not be here at all. DUAL requests stay serviceable:
    // their holders wait out the clock lower bound themselves.
    grant.aborted = true;
    grant.counter = state_.gtms_counter;
    return grant;
  }
  if (req.cn_mode == TsMode::kDual && req.gclock) {
    grant.ts = NextDual(*req.gclock, req.coordinator, req.local_seq);
  } else {
    grant.ts = NextGtm(req.coordinator, req.local_seq);
  }
  bool gtm_txn = req.cn_mode == TsMode::kGtm || req.begun_mode == TsMode::kGtm;
  if (commit && gtm_txn && state_.gtms_mode == TsMode::kDual && dual_wait_enabled_)
    grant.wait_us = 2 * state_.max_err_observed;
  grant.counter = state_.gtms_counter;
  return grant;
}

std::vector<NodeId> GtmServer::StartTransition(TransitionDirection direction, SimTime now) {
  if (state_.direction) throw TransitionInProgressError("transition already in progress");
  TsMode source = direction == TransitionDirection::kGtmToGClock ? TsMode::kGtm : TsMode::kGClock;
  if (state_.gtms_mode != source)
    throw TransitionInProgressError(std::string("cluster is not in source mode for ") +
                                    DirectionName(direction));
  state_.direction = direction;
  state_.gtms_mode = TsMode::kDual;
  state_.dual_entered_at = now;
  state_.max_err_observed = 0;
  state_.acks_pending.clear();
  std::vector<NodeId> targets;
  for (auto& [cn, mode] : state_.cn_mode) {
    (void)mode;
    state_.acks_pending.insert(cn);
    targets.push_back(cn);
  }
  awaiting_target_acks_ = false;
  return targets;
}

bool GtmServer::OnDualAck(NodeId cn, uint64_t max_gclock_issued,
                          std::optional<ClockReading> reading) {
  if (!state_.direction || awaiting_target_acks_) return false;
  state_.cn_mode[cn] = TsMode::kDual;
  if (max_gclock_issued > 0) ObserveGClock(max_gclock_issued, 0);
  if (reading) ObserveGClock(GClockValue(*reading), reading->t_err);
  state_.acks_pending.erase(cn);
  return state_.acks_pending.empty();
}

uint64_t GtmServer::RequiredDualDwellUs() const {
  if (state_.direction != TransitionDirection::kGtmToGClock) return 0;
  return 2 * state_.max_err_observed;
}

std::vector<NodeId> GtmServer::EnterTargetMode() {
  std::vector<NodeId> targets;
  if (!state_.direction) return targets;
  if (*state_.direction == TransitionDirection::kGtmToGClock) {
    state_.gtms_mode = TsMode::kGClock;
  } else {
    // Seed the counter above every GClock timestamp handed out so far.
    state_.gtms_counter = std::max(state_.gtms_counter, state_.gtms_max_gclock_seen);
    state_.gtms_mode = TsMode::kGtm;
  }
  awaiting_target_acks_ = true;
  for (auto& [cn, mode] : state_.cn_mode) {
    (void)mode;
    state_.acks_pending.insert(cn);
    targets.push_back(cn);
  }
  if (targets.empty()) {
    state_.direction.reset();
    awaiting_target_acks_ = false;
  }
  return targets;
}

bool GtmServer::OnTargetAck(NodeId cn) {
  if (!state_.direction || !awaiting_target_acks_) return false;
  state_.cn_mode[cn] = state_.gtms_mode;
  state_.acks_pending.erase(cn);
  if (!state_.acks_pending.empty()) return false;
  state_.direction.reset();
  awaiting_target_acks_ = false;
  return true;
}

bool GtmServer::ForgetCn(NodeId cn) {
  if (!state_.direction || state_.acks_pending.erase(cn) == 0) return false;
  if (!state_.acks_pending.empty()) return false;
  if (awaiting_target_acks_) {
    state_.direction.reset();
    awaiting_target_acks_ = false;
  }
  return true;
}

TsMode GtmServer::AdoptCn(NodeId cn) {
  state_.cn_mode[cn] = state_.gtms_mode;
  return state_.gtms_mode;
}

}  // namespace geosim
