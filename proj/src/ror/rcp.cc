#include "geosim/ror/rcp.h"

namespace geosim {

std::optional<Timestamp> MinOf(const std::map<NodeId, Timestamp>& values) {
  std::optional<Timestamp> out;
  for (const auto& [node, ts] : values)
    if (!out || ts < *out) out = ts;
  return out;
}

RcpCalculator::RcpCalculator(bool clamp, uint32_t miss_limit)
    : clamp_(clamp), miss_limit_(miss_limit) {}

void RcpCalculator::AddReplica(NodeId replica) { replicas_.emplace(replica, Tracked{}); }

void RcpCalculator::Seed(const Timestamp& floor, uint64_t epoch) {
  published_.ts = floor;
  published_.epoch = epoch;
  has_published_ = floor != kMinTimestamp;
}

std::optional<ReplicaConsistencyPoint> RcpCalculator::Round(
    const std::map<NodeId, std::optional<Timestamp>>& replies, SimTime now) {
  for (auto& [node, t] : replicas_) {
    auto it = replies.find(node);
    if (it != replies.end() && it->second) {
      t.last = it->second;
      t.misses = 0;
    } else {
      ++t.misses;
    }
  }

  ReplicaConsistencyPoint next;
  next.epoch = published_.epoch;
  next.computed_at = now;
  bool stalled = false;
  for (auto& [node, t] : replicas_) {
    bool was_excluded = excluded_.count(node) != 0;
    if (t.misses >= miss_limit_) {
      excluded_.insert(node);
      continue;
    }
    if (!t.last) {
      // Unknown and not yet given up on: nothing safe to publish.
      stalled = true;
      continue;
    }
    if (was_excluded) {
      if (t.misses > 0) continue;
      if (clamp_ && has_published_ && *t.last < published_.ts) continue;
      excluded_.erase(node);
    }
    next.contributing[node] = *t.last;
    next.included.insert(node);
  }
  auto raw = MinOf(next.contributing);
  if (stalled || !raw) return std::nullopt;

  next.ts = *raw;
  if (clamp_ && has_published_ && next.ts < published_.ts) next.ts = published_.ts;
  published_ = next;
  has_published_ = true;
  return published_;
}

}  // namespace geosim
