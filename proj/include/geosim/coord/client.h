#pragma once

#include <map>

#include "geosim/coord/messages.h"

namespace geosim {

class Cluster;

// Workload client. Closed model: one operation at a time with think time in
// between; open model: operations arrive on their own schedule.
class ClientNode {
 public:
  ClientNode(Cluster& cluster, NodeId id, uint32_t index);

  NodeId id() const { return id_; }
  uint32_t index() const { return index_; }
  bool idle() const { return outstanding_.empty(); }
  bool stopped() const { return stopped_; }

  void Start();
  void OnReply(const ClientReply& reply);

 private:
  void IssueNext();
  void Issue(const Operation& op);
  void OnTimeout(uint64_t op_id);
  NodeId PickCn(bool exclude_current);

  Cluster& c_;
  NodeId id_;
  uint32_t index_;
  NodeId cn_ = kNoNode;
  Timestamp last_commit_;
  Timestamp last_snapshot_;
  NodeId last_cn_ = kNoNode;
  std::map<uint64_t, EventId> outstanding_;
  bool stopped_ = false;
};

}  // namespace geosim
