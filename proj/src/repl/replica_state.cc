#include "geosim/repl/replica_state.h"

namespace geosim {

bool ReplicaState::Apply(const RedoRecord& r) {
  if (r.lsn <= applied_lsn_) return false;
  if (r.lsn != applied_lsn_ + 1)
    throw LsnGapError("shard " + std::to_string(shard_) + ": expected lsn " +
                      std::to_string(applied_lsn_ + 1) + ", got " + std::to_string(r.lsn));
  table_.Apply(r);
  if (r.carries_commit_ts() && max_commit_ts_ < r.commit_ts) max_commit_ts_ = r.commit_ts;
  applied_lsn_ = r.lsn;
  return true;
}

ReplicaReadResult ReplicaState::ReadAt(const std::string& key, const Timestamp& snapshot) const {
  ReplicaReadResult res;
  if (max_commit_ts_ < snapshot) {
    res.status = ReplicaReadStatus::kRejected;
    return res;
  }
  if (auto holder = table_.LockHolder(key)) {
    res.status = ReplicaReadStatus::kBlocked;
    res.blocker = *holder;
    return res;
  }
  if (const VersionedValue* v = table_.VisibleAt(key, snapshot)) {
    res.value = v->value;
    res.version = v->commit_ts;
  }
  return res;
}

void ReplicaState::ForceMaxCommitTs(const Timestamp& ts) {
  if (max_commit_ts_ < ts) max_commit_ts_ = ts;
}

}  // namespace geosim
