#include "geosim/coord/replica_node.h"

#include "geosim/coord/cluster.h"
#include "geosim/coord/compute_node.h"
#include "geosim/coord/data_node.h"

namespace geosim {

ReplicaNode::ReplicaNode(Cluster& cluster, NodeId id, ShardId shard, uint32_t index,
                         NodeId primary)
    : c_(cluster), id_(id), shard_(shard), index_(index), primary_(primary), state_(shard) {}

void ReplicaNode::OnCrash() {
  parked_.clear();
  ++incarnation_;
}

void ReplicaNode::OnRecover() {
  state_ = ReplicaState(shard_);
  for (const auto& r : received_) state_.Apply(r);
  SendResume();
}

void ReplicaNode::SendResume() {
  uint64_t applied = state_.applied_lsn();
  NodeId me = id_;
  ShardId shard = shard_;
  c_.sim().Send(id_, primary_, kSmallMsg,
                [this, me, shard, applied] { c_.Primary(shard).OnReplicaResume(me, applied); },
                "resume");
}

void ReplicaNode::OnRecords(const std::vector<RedoRecord>& records) {
  for (const auto& r : records) {
    if (r.lsn <= state_.applied_lsn()) continue;
    if (r.lsn != state_.applied_lsn() + 1) {
      // Something was lost while this node was down; ask for a resend.
      SendResume();
      break;
    }
    state_.Apply(r);
    received_.push_back(r);
  }
  if (c_.config().replication.sync_quorum) {
    uint64_t applied = state_.applied_lsn();
    NodeId me = id_;
    ShardId shard = shard_;
    c_.sim().Send(id_, primary_, kSmallMsg,
                  [this, me, shard, applied] { c_.Primary(shard).OnReplicaAck(me, applied); },
                  "replica_ack");
  }
  RetryParked();
}

void ReplicaNode::OnResumeQuery() { SendResume(); }

void ReplicaNode::OnRead(const ReplicaReadRequest& req) {
  Parked p{req, c_.sim().now(), state_.applied_lsn(), incarnation_, 0};
  if (TryServe(p)) return;
  parked_.push_back(p);
  uint64_t query = req.query;
  uint64_t inc = incarnation_;
  c_.sim().Schedule(
      c_.config().replication.read_block_timeout_us,
      [this, query, inc] {
        for (auto it = parked_.begin(); it != parked_.end(); ++it) {
          if (it->req.query != query || it->incarnation != inc) continue;
          ReplicaReadReply reply;
          reply.query = query;
          reply.shard = shard_;
          reply.node = id_;
          reply.ok = false;
          reply.reason = "timeout";
          NodeId cn = it->req.cn;
          parked_.erase(it);
          c_.sim().Send(id_, cn, kSmallMsg,
                        [this, cn, reply] { c_.CnByNode(cn)->OnReplicaReply(reply); },
                        "replica_read_reply");
          return;
        }
      },
      id_, "replica_read_timeout");
}

bool ReplicaNode::TryServe(Parked& p) {
  ReplicaReadReply reply;
  reply.query = p.req.query;
  reply.shard = shard_;
  reply.node = id_;
  for (const auto& k : p.req.keys) {
    ReplicaReadResult res = state_.ReadAt(k, p.req.snapshot);
    if (res.status == ReplicaReadStatus::kBlocked) {
      if (!p.blocked_by) p.blocked_by = res.blocker;
      return false;
    }
    if (res.status == ReplicaReadStatus::kRejected) {
      reply.ok = false;
      reply.reason = "rejected";
      reply.reads.clear();
      break;
    }
    ReadObservation o;
    o.key = k;
    o.shard = shard_;
    o.node = id_;
    o.replica = true;
    o.value = res.value;
    if (res.value) o.version = res.version;
    o.served_at = p.arrived;
    o.applied_lsn = p.applied_at_arrival;
    o.blocked_by = p.blocked_by;
    reply.reads.push_back(std::move(o));
  }
  size_t bytes = kSmallMsg;
  for (const auto& o : reply.reads) bytes += o.key.size() + (o.value ? o.value->size() : 0) + 24;
  NodeId cn = p.req.cn;
  c_.sim().Send(id_, cn, bytes, [this, cn, reply] { c_.CnByNode(cn)->OnReplicaReply(reply); },
                "replica_read_reply");
  return true;
}

void ReplicaNode::RetryParked() {
  std::vector<Parked> still;
  for (auto& p : parked_)
    if (!TryServe(p)) still.push_back(p);
  parked_ = std::move(still);
}

void ReplicaNode::OnForceMaxCommit(const Timestamp& ts) {
  state_.ForceMaxCommitTs(ts);
  RetryParked();
}

void ReplicaNode::OnProbe(NodeId cn, SimTime sent_at) {
  NodeId me = id_;
  Timestamp max = state_.max_commit_ts();
  c_.sim().Send(id_, cn, kSmallMsg,
                [this, cn, me, sent_at, max] { c_.CnByNode(cn)->OnProbeReply(me, sent_at, max); },
                "probe_reply");
}

void ReplicaNode::OnPoll(NodeId cn) {
  NodeId me = id_;
  Timestamp max = state_.max_commit_ts();
  c_.sim().Send(id_, cn, kSmallMsg, [this, cn, me, max] { c_.CnByNode(cn)->OnPollReply(me, max); },
                "poll_reply");
}

}  // namespace geosim
