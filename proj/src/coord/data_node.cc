#include "geosim/coord/data_node.h"

#include <algorithm>

#include "geosim/coord/cluster.h"
#include "geosim/coord/compute_node.h"
#include "geosim/coord/replica_node.h"

namespace geosim {

namespace {
constexpr SimTime kInDoubtScanUs = 500'000;
}

DataNode::DataNode(Cluster& cluster, NodeId id, ShardId shard)
    : c_(cluster), id_(id), shard_(shard), store_(shard, &cluster.dist()) {}

void DataNode::AttachReplica(NodeId replica, uint64_t lag_us) {
  Shipping s;
  s.node = replica;
  s.lag_us = lag_us;
  replicas_.push_back(s);
}

void DataNode::Start() {
  c_.sim().Schedule(kInDoubtScanUs, [this] { InDoubtTick(); }, id_, "dn_in_doubt");
}

void DataNode::OnCrash() {
  blocked_.clear();
  flush_scheduled_ = false;
  coordinator_.clear();
  inquired_.clear();
  quorum_waiting_.clear();
}

void DataNode::OnRecover() {
  store_.Recover(c_.sim().now());
  // Shipping positions were volatile; ask every replica where it stands.
  for (auto& r : replicas_) {
    r.resumed = false;
    NodeId rep = r.node;
    c_.sim().Send(id_, rep, kSmallMsg, [this, rep] { c_.ReplicaByNode(rep)->OnResumeQuery(); },
                  "resume_query");
  }
  Start();
}

void DataNode::OnExec(const ExecRequest& req) {
  if (!req.writes.empty() || !req.ddl_table.empty()) coordinator_[req.txn] = req.cn;
  if (!TryExec(req)) blocked_.push_back(req);
}

bool DataNode::TryExec(const ExecRequest& req) {
  for (const auto& k : req.reads) {
    auto holder = store_.LockHolder(k);
    if (holder && *holder != req.txn) return false;
  }
  SimTime now = c_.sim().now();
  ExecReply reply;
  reply.txn = req.txn;
  reply.shard = shard_;
  reply.node = id_;
  reply.snapshot = req.bypass ? store_.last_committed_ts() : req.snapshot;
  if (req.bypass) {
    HistoryEvent e;
    e.kind = EventKind::kSnapshot;
    e.at = now;
    e.txn = req.txn;
    e.client = req.client;
    e.node = id_;
    e.ts = reply.snapshot;
    e.detail = "bypass";
    c_.history().Record(std::move(e));
  }
  for (const auto& k : req.reads) {
    ReadObservation o;
    o.key = k;
    o.shard = shard_;
    o.node = id_;
    if (const VersionedValue* v = store_.table().VisibleAt(k, reply.snapshot)) {
      o.value = v->value;
      o.version = v->commit_ts;
    }
    reply.reads.push_back(std::move(o));
  }
  if (!req.read_only) {
    try {
      for (const auto& [k, v] : req.writes) store_.StageWrite(req.txn, k, v, now);
      if (!req.ddl_table.empty()) store_.StageDdl(req.txn, req.ddl_table, now);
    } catch (const RoutingError& e) {
      reply.ok = false;
      reply.reason = "routing";
    }
    ScheduleFlush();
  }
  size_t bytes = kSmallMsg;
  for (const auto& o : reply.reads) bytes += o.key.size() + (o.value ? o.value->size() : 0) + 24;
  NodeId cn = req.cn;
  c_.sim().Send(id_, cn, bytes, [this, cn, reply] { c_.CnByNode(cn)->OnExecReply(reply); },
                "exec_reply");
  return true;
}

void DataNode::RetryBlocked() {
  std::deque<ExecRequest> still;
  while (!blocked_.empty()) {
    ExecRequest req = std::move(blocked_.front());
    blocked_.pop_front();
    if (!TryExec(req)) still.push_back(std::move(req));
  }
  blocked_ = std::move(still);
}

void DataNode::OnPrepare(TxnId txn, NodeId cn, const Timestamp& snapshot, bool two_phase) {
  bool ok = false;
  auto phase = store_.phase(txn);
  if (phase == ShardTxnPhase::kActive) {
    ok = store_.Prepare(txn, snapshot, two_phase, c_.sim().now());
    ScheduleFlush();
  } else if (phase) {
    ok = true;  // duplicate
  }
  if (!ok) coordinator_.erase(txn);
  ShardId shard = shard_;
  c_.sim().Send(id_, cn, kSmallMsg,
                [this, cn, txn, shard, ok] { c_.CnByNode(cn)->OnPrepareReply(txn, shard, ok); },
                "prepare_reply");
}

void DataNode::OnFinalize(TxnId txn, NodeId cn, const std::optional<Timestamp>& ts) {
  OnResolve(txn, ts);
  if (ts && c_.config().replication.sync_quorum && QuorumSize() > 0) {
    quorum_waiting_.push_back({txn, cn, store_.log().empty() ? 0 : store_.log().back().lsn});
    ReleaseQuorumAcks();
    return;
  }
  AckFinalize(txn, cn);
}

void DataNode::OnResolve(TxnId txn, const std::optional<Timestamp>& ts) {
  auto phase = store_.phase(txn);
  if (phase) {
    SimTime now = c_.sim().now();
    if (*phase == ShardTxnPhase::kActive) {
      store_.AbortActive(txn, now);
    } else {
      store_.Finalize(txn, ts, now);
    }
    ScheduleFlush();
    RetryBlocked();
  }
  coordinator_.erase(txn);
  inquired_.erase(txn);
}

void DataNode::AckFinalize(TxnId txn, NodeId cn) {
  ShardId shard = shard_;
  c_.sim().Send(id_, cn, kSmallMsg,
                [this, cn, txn, shard] { c_.CnByNode(cn)->OnFinalizeAck(txn, shard); },
                "finalize_ack");
}

size_t DataNode::QuorumSize() const { return replicas_.empty() ? 0 : replicas_.size() / 2 + 1; }

void DataNode::ReleaseQuorumAcks() {
  std::vector<PendingAck> still;
  for (const auto& p : quorum_waiting_) {
    size_t n = 0;
    for (const auto& r : replicas_)
      if (r.acked >= p.lsn) ++n;
    if (n >= QuorumSize()) {
      AckFinalize(p.txn, p.cn);
    } else {
      still.push_back(p);
    }
  }
  quorum_waiting_ = std::move(still);
}

void DataNode::OnHeartbeat(const Timestamp& ts) {
  store_.AppendHeartbeat(ts, c_.sim().now());
  ScheduleFlush();
}

void DataNode::OnReplicaResume(NodeId replica, uint64_t applied_lsn) {
  for (auto& r : replicas_) {
    if (r.node != replica) continue;
    r.shipped = applied_lsn;
    r.acked = std::max(r.acked, applied_lsn);
    r.resumed = true;
  }
  ScheduleFlush();
}

void DataNode::OnReplicaAck(NodeId replica, uint64_t applied_lsn) {
  for (auto& r : replicas_)
    if (r.node == replica) r.acked = std::max(r.acked, applied_lsn);
  ReleaseQuorumAcks();
}

void DataNode::OnProbe(NodeId cn, SimTime sent_at) {
  NodeId me = id_;
  c_.sim().Send(id_, cn, kSmallMsg,
                [this, cn, me, sent_at] {
                  c_.CnByNode(cn)->OnProbeReply(me, sent_at, std::nullopt);
                },
                "probe_reply");
}

void DataNode::ScheduleFlush() {
  if (flush_scheduled_) return;
  flush_scheduled_ = true;
  c_.sim().Schedule(0, [this] { Flush(); }, id_, "dn_flush");
}

void DataNode::Flush() {
  flush_scheduled_ = false;
  const auto& log = store_.log();
  for (auto& r : replicas_) {
    if (!r.resumed || r.shipped >= log.size()) continue;
    std::vector<RedoRecord> batch(log.begin() + static_cast<ptrdiff_t>(r.shipped), log.end());
    size_t bytes = kSmallMsg;
    for (const auto& rec : batch) bytes += EncodedSize(rec);
    r.shipped = log.size();
    NodeId rep = r.node;
    c_.sim().Send(id_, rep, bytes,
                  [this, rep, batch = std::move(batch)] {
                    c_.ReplicaByNode(rep)->OnRecords(batch);
                  },
                  "redo", r.lag_us);
  }
}

void DataNode::InDoubtTick() {
  SimTime now = c_.sim().now();
  const auto& t = c_.config().timeouts;
  for (const auto& [txn, since] : store_.InDoubt()) {
    if (now - since < t.in_doubt_us) continue;
    auto asked = inquired_.find(txn);
    if (asked != inquired_.end() && now - asked->second < t.inquiry_us) continue;
    NodeId target = kNoNode;
    auto coord = coordinator_.find(txn);
    if (asked == inquired_.end() && coord != coordinator_.end()) {
      target = coord->second;
    } else {
      // The coordinator stayed silent: any other live CN can settle it.
      auto& cns = c_.cns();
      size_t start = static_cast<size_t>(txn % cns.size());
      for (size_t i = 0; i < cns.size(); ++i) {
        NodeId cand = cns[(start + i) % cns.size()]->id();
        if (!c_.sim().alive(cand)) continue;
        if (coord != coordinator_.end() && cand == coord->second) continue;
        target = cand;
        break;
      }
    }
    inquired_[txn] = now;
    if (target != kNoNode) SendInquiry(txn, target);
  }
  c_.sim().Schedule(kInDoubtScanUs, [this] { InDoubtTick(); }, id_, "dn_in_doubt");
}

void DataNode::SendInquiry(TxnId txn, NodeId cn) {
  NodeId me = id_;
  c_.sim().Send(id_, cn, kSmallMsg, [this, cn, txn, me] { c_.CnByNode(cn)->OnInquiry(txn, me); },
                "inquiry");
}

}  // namespace geosim
