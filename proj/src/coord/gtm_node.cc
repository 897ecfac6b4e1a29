#include "geosim/coord/gtm_node.h"

#include "geosim/coord/cluster.h"
#include "geosim/coord/compute_node.h"
#include "geosim/coord/messages.h"

namespace geosim {

namespace {
constexpr SimTime kRetransmitUs = 500'000;
}

GtmNode::GtmNode(Cluster& cluster, NodeId id, TsMode initial, bool dual_wait_enabled)
    : c_(cluster), id_(id), server_(initial, dual_wait_enabled) {}

uint64_t GtmNode::extra_delay_us() const { return c_.config().gtm_extra_delay_us; }

void GtmNode::Start() {}

void GtmNode::OnRecover() {
  // Server state is durable; only the timers died with the node.
  if (!server_.transition_in_progress()) return;
  if (!target_sent_ && server_.state().acks_pending.empty()) {
    dwelling_ = false;
    OnDualAck(kNoNode, 0, std::nullopt);
  }
  c_.sim().Schedule(kRetransmitUs, [this] { RetransmitTick(); }, id_, "gtm_retransmit");
}

void GtmNode::OnRequest(NodeId cn, const TsRequest& req,
                        std::function<void(const TsGrant&)> reply) {
  TsGrant grant = server_.Serve(req);
  c_.sim().Send(id_, cn, kSmallMsg, [reply, grant] { reply(grant); }, "ts_grant",
                extra_delay_us());
}

bool GtmNode::StartTransition(TransitionDirection direction) {
  if (!c_.sim().alive(id_)) return false;
  std::vector<NodeId> targets;
  try {
    targets = server_.StartTransition(direction, c_.sim().now());
  } catch (const TransitionInProgressError&) {
    return false;
  }
  dwelling_ = false;
  target_sent_ = false;
  NoteMode();
  bool done = targets.empty();
  for (NodeId cn : targets) {
    if (c_.sim().alive(cn)) {
      SendSwitch(cn, TsMode::kDual);
    } else if (server_.ForgetCn(cn)) {
      done = true;
    }
  }
  if (done) OnDualAck(kNoNode, 0, std::nullopt);
  c_.sim().Schedule(kRetransmitUs, [this] { RetransmitTick(); }, id_, "gtm_retransmit");
  return true;
}

void GtmNode::OnDualAck(NodeId cn, uint64_t max_gclock_issued,
                        std::optional<ClockReading> reading) {
  if (dwelling_ || target_sent_ || !server_.transition_in_progress()) return;
  bool all = cn == kNoNode ? server_.state().acks_pending.empty()
                           : server_.OnDualAck(cn, max_gclock_issued, reading);
  if (!all) return;
  if (*server_.state().direction == TransitionDirection::kGtmToGClock) {
    dwelling_ = true;
    c_.sim().Schedule(server_.RequiredDualDwellUs(), [this] { EnterTarget(); }, id_, "gtm_dwell");
  } else {
    EnterTarget();
  }
}

void GtmNode::EnterTarget() {
  dwelling_ = false;
  target_sent_ = true;
  std::vector<NodeId> targets = server_.EnterTargetMode();
  NoteMode();
  for (NodeId cn : targets) {
    if (c_.sim().alive(cn)) {
      SendSwitch(cn, server_.mode());
    } else if (server_.ForgetCn(cn)) {
      NoteMode();
    }
  }
}

void GtmNode::OnTargetAck(NodeId cn) {
  if (server_.OnTargetAck(cn)) NoteMode();
}

void GtmNode::OnAdopt(NodeId cn) {
  TsMode mode = server_.AdoptCn(cn);
  c_.sim().Send(id_, cn, kSmallMsg, [this, cn, mode] { c_.CnByNode(cn)->OnAdoptReply(mode); },
                "adopt_reply", extra_delay_us());
}

void GtmNode::SendSwitch(NodeId cn, TsMode mode) {
  c_.sim().Send(id_, cn, kSmallMsg, [this, cn, mode] { c_.CnByNode(cn)->OnSwitchMode(mode); },
                "switch_mode", extra_delay_us());
}

void GtmNode::RetransmitTick() {
  if (!server_.transition_in_progress()) return;
  std::set<NodeId> pending = server_.state().acks_pending;
  TsMode mode = target_sent_ ? server_.mode() : TsMode::kDual;
  for (NodeId cn : pending) {
    if (c_.sim().alive(cn)) {
      SendSwitch(cn, mode);
    } else if (server_.ForgetCn(cn)) {
      if (target_sent_) {
        NoteMode();
      } else {
        OnDualAck(kNoNode, 0, std::nullopt);
      }
    }
  }
  if (server_.transition_in_progress())
    c_.sim().Schedule(kRetransmitUs, [this] { RetransmitTick(); }, id_, "gtm_retransmit");
}

void GtmNode::NoteMode() {
  std::string who = "gtm";
  if (!server_.transition_in_progress()) who += " (transition complete)";
  c_.NoteModeChange(who, server_.mode());
}

}  // namespace geosim
