#pragma once

#include <functional>
#include <optional>

#include "geosim/txn/gtm_server.h"

namespace geosim {

class Cluster;

// Network wrapper around GtmServer: serves timestamp requests and drives
// mode transitions by messaging the CNs.
class GtmNode {
 public:
  GtmNode(Cluster& cluster, NodeId id, TsMode initial, bool dual_wait_enabled);

  NodeId id() const { return id_; }
  GtmServer& server() { return server_; }
  const GtmServer& server() const { return server_; }
  // Extra one-way delay on every message to or from the GTM server.
  uint64_t extra_delay_us() const;

  void Start();
  void OnRecover();

  void OnRequest(NodeId cn, const TsRequest& req, std::function<void(const TsGrant&)> reply);
  // False when a transition is running or the cluster is not in the
  // direction's source mode.
  bool StartTransition(TransitionDirection direction);
  void OnDualAck(NodeId cn, uint64_t max_gclock_issued, std::optional<ClockReading> reading);
  void OnTargetAck(NodeId cn);
  void OnAdopt(NodeId cn);

 private:
  void SendSwitch(NodeId cn, TsMode mode);
  void RetransmitTick();
  void EnterTarget();
  void NoteMode();

  Cluster& c_;
  NodeId id_;
  GtmServer server_;
  bool dwelling_ = false;
  bool target_sent_ = false;
};

}  // namespace geosim
