#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "geosim/coord/messages.h"
#include "geosim/store/shard_store.h"

namespace geosim {

class Cluster;

// Primary of one shard: executes reads and staged writes, votes in commit,
// ships its redo log to the shard's replicas and chases in-doubt outcomes.
class DataNode {
 public:
  DataNode(Cluster& cluster, NodeId id, ShardId shard);

  NodeId id() const { return id_; }
  ShardId shard() const { return shard_; }
  ShardStore& store() { return store_; }
  const ShardStore& store() const { return store_; }

  // Replica nodes of this shard, in replica index order.
  void AttachReplica(NodeId replica, uint64_t lag_us);
  void Start();
  void OnCrash();
  void OnRecover();

  void OnExec(const ExecRequest& req);
  void OnPrepare(TxnId txn, NodeId cn, const Timestamp& snapshot, bool two_phase);
  void OnFinalize(TxnId txn, NodeId cn, const std::optional<Timestamp>& ts);
  void OnResolve(TxnId txn, const std::optional<Timestamp>& ts);
  void OnHeartbeat(const Timestamp& ts);
  void OnReplicaResume(NodeId replica, uint64_t applied_lsn);
  void OnReplicaAck(NodeId replica, uint64_t applied_lsn);
  void OnProbe(NodeId cn, SimTime sent_at);

 private:
  struct Shipping {
    NodeId node = kNoNode;
    uint64_t lag_us = 0;
    uint64_t shipped = 0;  // highest lsn sent
    uint64_t acked = 0;
    bool resumed = true;   // false until the replica reported its position
  };

  struct PendingAck {
    TxnId txn;
    NodeId cn;
    uint64_t lsn;
  };

  // Tries to serve a read request; false when a key is locked.
  bool TryExec(const ExecRequest& req);
  void RetryBlocked();
  void ScheduleFlush();
  void Flush();
  void InDoubtTick();
  void SendInquiry(TxnId txn, NodeId cn);
  void AckFinalize(TxnId txn, NodeId cn);
  void ReleaseQuorumAcks();
  size_t QuorumSize() const;

  Cluster& c_;
  NodeId id_;
  ShardId shard_;
  ShardStore store_;
  std::vector<Shipping> replicas_;
  bool flush_scheduled_ = false;
  std::deque<ExecRequest> blocked_;
  // Coordinator of every transaction that staged writes here.
  std::map<TxnId, NodeId> coordinator_;
  // Transactions whose outcome was asked for, and when.
  std::map<TxnId, SimTime> inquired_;
  std::vector<PendingAck> quorum_waiting_;
};

}  // namespace geosim
