#include "geosim/coord/client.h"

#include <limits>
#include <vector>

#include "geosim/coord/cluster.h"
#include "geosim/coord/compute_node.h"

namespace geosim {

ClientNode::ClientNode(Cluster& cluster, NodeId id, uint32_t index)
    : c_(cluster), id_(id), index_(index) {}

void ClientNode::Start() {
  cn_ = PickCn(false);
  IssueNext();
}

NodeId ClientNode::PickCn(bool exclude_current) {
  // Nearest alive CN; clients spread over equally near ones by index.
  std::vector<NodeId> nearest;
  uint64_t best_delay = std::numeric_limits<uint64_t>::max();
  for (auto& cn : c_.cns()) {
    NodeId n = cn->id();
    if (!c_.sim().alive(n)) continue;
    if (exclude_current && n == cn_) continue;
    uint64_t d = c_.sim().BaseDelay(id_, n);
    if (d < best_delay) {
      nearest.clear();
      best_delay = d;
    }
    if (d == best_delay) nearest.push_back(n);
  }
  if (nearest.empty()) return cn_ != kNoNode ? cn_ : c_.cns().front()->id();
  return nearest[index_ % nearest.size()];
}

void ClientNode::IssueNext() {
  if (stopped_) return;
  const auto& cfg = c_.config();
  if (c_.sim().now() >= cfg.start_time_us + cfg.duration_us || !c_.TakeOpBudget()) {
    stopped_ = true;
    return;
  }
  Operation op = c_.workload().Next(index_);
  c_.sim().Schedule(op.delay_us, [this, op] { Issue(op); }, id_, "client_issue");
}

void ClientNode::Issue(const Operation& op) {
  const auto& cfg = c_.config();
  if (c_.sim().now() >= cfg.start_time_us + cfg.duration_us) {
    stopped_ = true;
    return;
  }
  if (!c_.sim().alive(cn_)) cn_ = PickCn(true);
  HistoryEvent e;
  e.kind = EventKind::kInvoke;
  e.at = c_.sim().now();
  e.txn = op.id + 1;
  e.client = index_;
  e.node = cn_;
  e.read_only = op.kind == OpKind::kReadOnly;
  e.keys = op.kind == OpKind::kReadOnly ? op.reads : op.writes;
  e.staleness_bound_us = op.staleness_bound_us;
  e.detail = OpKindName(op.kind);
  c_.history().Record(std::move(e));

  ClientRequest req;
  req.op = op;
  req.client_node = id_;
  req.last_commit = last_commit_;
  req.last_snapshot = last_snapshot_;
  req.last_cn = last_cn_;
  ComputeNode* cn = c_.CnByNode(cn_);
  size_t bytes = KeysBytes(op.reads) + KeysBytes(op.writes);
  c_.sim().Send(id_, cn_, bytes, [cn, req] { cn->OnClientRequest(req); }, "client_request");
  uint64_t op_id = op.id;
  outstanding_[op_id] = c_.sim().Schedule(cfg.timeouts.client_op_us,
                                          [this, op_id] { OnTimeout(op_id); }, id_, "client_timeout");
  if (c_.workload().spec().arrival == ArrivalModel::kOpen) IssueNext();
}

void ClientNode::OnReply(const ClientReply& r) {
  auto it = outstanding_.find(r.op_id);
  if (it == outstanding_.end()) return;
  c_.sim().Cancel(it->second);
  outstanding_.erase(it);
  if (r.outcome == OpOutcome::kCommitted && last_commit_ < r.commit_ts) last_commit_ = r.commit_ts;
  if (r.outcome == OpOutcome::kAnswered && r.replica_route && last_snapshot_ < r.snapshot)
    last_snapshot_ = r.snapshot;
  last_cn_ = cn_;
  if (r.reason == "cn_not_ready") cn_ = PickCn(true);
  if (c_.workload().spec().arrival == ArrivalModel::kClosed) IssueNext();
}

void ClientNode::OnTimeout(uint64_t op_id) {
  if (outstanding_.erase(op_id) == 0) return;
  cn_ = PickCn(true);
  if (c_.workload().spec().arrival == ArrivalModel::kClosed) IssueNext();
}

}  // namespace geosim
