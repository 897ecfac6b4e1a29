#pragma once

#include <string>
#include <vector>

#include "geosim/coord/messages.h"
#include "geosim/repl/replica_state.h"

namespace geosim {

class Cluster;

struct ReplicaReadRequest {
  uint64_t query = 0;
  NodeId cn = kNoNode;
  std::vector<std::string> keys;
  Timestamp snapshot;
};

// Asynchronous replica of one shard. Received records are durable; the
// replay state is rebuilt from them after a crash.
class ReplicaNode {
 public:
  ReplicaNode(Cluster& cluster, NodeId id, ShardId shard, uint32_t index, NodeId primary);

  NodeId id() const { return id_; }
  ShardId shard() const { return shard_; }
  uint32_t index() const { return index_; }
  const ReplicaState& state() const { return state_; }

  void OnCrash();
  void OnRecover();

  void OnRecords(const std::vector<RedoRecord>& records);
  void OnResumeQuery();
  void OnRead(const ReplicaReadRequest& req);
  void OnForceMaxCommit(const Timestamp& ts);
  void OnProbe(NodeId cn, SimTime sent_at);
  void OnPoll(NodeId cn);

 private:
  struct Parked {
    ReplicaReadRequest req;
    SimTime arrived;
    uint64_t applied_at_arrival;
    uint64_t incarnation;
    TxnId blocked_by = 0;
  };

  // Returns false while a key is blocked.
  bool TryServe(Parked& p);
  void RetryParked();
  void SendResume();

  Cluster& c_;
  NodeId id_;
  ShardId shard_;
  uint32_t index_;
  NodeId primary_;
  ReplicaState state_;
  std::vector<RedoRecord> received_;
  std::vector<Parked> parked_;
  uint64_t incarnation_ = 0;
};

}  // namespace geosim
