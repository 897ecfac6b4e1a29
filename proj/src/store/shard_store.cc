#include "geosim/store/shard_store.h"

namespace geosim {

ShardStore::ShardStore(ShardId shard, const Distribution* dist) : shard_(shard), dist_(dist) {}

RedoRecord& ShardStore::Append(RedoKind kind, TxnId txn, SimTime now) {
  RedoRecord r;
  r.lsn = log_.size() + 1;
  r.kind = kind;
  r.txn = txn;
  r.appended_at = now;
  log_.push_back(std::move(r));
  return log_.back();
}

void ShardStore::StageWrite(TxnId txn, const std::string& key, const std::string& value,
                            SimTime now) {
  if (dist_ && !Distribution::IsDdlKey(key) && dist_->ShardOf(key) != shard_)
    throw RoutingError("key " + key + " is not owned by shard " + std::to_string(shard_));
  auto [it, inserted] = txns_.emplace(txn, TxnState{});
  if (inserted) it->second.since = now;
  if (it->second.phase != ShardTxnPhase::kActive)
    throw UnknownTxnError("write after prepare for txn " + std::to_string(txn));
  table_.Stage(txn, key, value);
  RedoRecord& r = Append(RedoKind::kWrite, txn, now);
  r.keys = {key};
  r.payload = value;
}

void ShardStore::StageDdl(TxnId txn, const std::string& table, SimTime now) {
  StageWrite(txn, Distribution::DdlKey(table), "ddl", now);
  TxnState& st = txns_.at(txn);
  st.ddl = true;
  st.table = table;
}

std::optional<std::string> ShardStore::ReadAt(const std::string& key,
                                              const Timestamp& snapshot) const {
  return table_.ReadAt(key, snapshot);
}

std::optional<std::string> ShardStore::ReadOwn(TxnId txn, const std::string& key) const {
  return table_.PendingValue(txn, key);
}

bool ShardStore::Prepare(TxnId txn, const Timestamp& snapshot, bool two_phase, SimTime now) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) throw UnknownTxnError("prepare of unknown txn " + std::to_string(txn));
  if (it->second.phase != ShardTxnPhase::kActive)
    throw UnknownTxnError("txn " + std::to_string(txn) + " already prepared");
  std::vector<std::string> keys = table_.StagedKeys(txn);
  for (const auto& k : keys) {
    auto holder = table_.LockHolder(k);
    bool locked = holder && *holder != txn;
    if (locked || table_.CommittedAfter(k, snapshot)) {
      table_.Discard(txn);
      txns_.erase(it);
      Append(RedoKind::kAbort, txn, now);
      return false;
    }
  }
  table_.Lock(txn, keys);
  Append(RedoKind::kPendingCommit, txn, now).keys = keys;
  if (two_phase) {
    Append(RedoKind::kPrepare, txn, now).keys = keys;
    it->second.phase = ShardTxnPhase::kPrepared;
  } else {
    it->second.phase = ShardTxnPhase::kPendingCommit;
  }
  it->second.since = now;
  return true;
}

void ShardStore::Finalize(TxnId txn, const std::optional<Timestamp>& commit_ts, SimTime now) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) throw UnknownTxnError("finalize of unknown txn " + std::to_string(txn));
  TxnState st = it->second;
  if (!commit_ts) {
    if (st.phase == ShardTxnPhase::kActive) {
      AbortActive(txn, now);
      return;
    }
    table_.Discard(txn);
    txns_.erase(it);
    Append(st.phase == ShardTxnPhase::kPrepared ? RedoKind::kAbortPrepared : RedoKind::kAbort,
           txn, now);
    return;
  }
  if (st.phase == ShardTxnPhase::kActive)
    throw UnknownTxnError("commit of unprepared txn " + std::to_string(txn));
  table_.Commit(txn, *commit_ts);
  if (st.ddl) table_.SetDdlTs(st.table, *commit_ts);
  txns_.erase(it);
  RedoKind kind = st.ddl ? RedoKind::kDdl
                  : st.phase == ShardTxnPhase::kPrepared ? RedoKind::kCommitPrepared
                                                         : RedoKind::kCommit;
  RedoRecord& r = Append(kind, txn, now);
  r.commit_ts = *commit_ts;
  if (st.ddl) r.payload = st.table;
  if (last_committed_ < *commit_ts) last_committed_ = *commit_ts;
}

void ShardStore::AbortActive(TxnId txn, SimTime now) {
  auto it = txns_.find(txn);
  if (it == txns_.end()) return;
  if (it->second.phase != ShardTxnPhase::kActive) {
    Finalize(txn, std::nullopt, now);
    return;
  }
  table_.Discard(txn);
  txns_.erase(it);
  Append(RedoKind::kAbort, txn, now);
}

void ShardStore::AppendHeartbeat(const Timestamp& ts, SimTime now) {
  RedoRecord& r = Append(RedoKind::kHeartbeat, 0, now);
  r.commit_ts = ts;
  if (last_committed_ < ts) last_committed_ = ts;
}

std::optional<ShardTxnPhase> ShardStore::phase(TxnId txn) const {
  auto it = txns_.find(txn);
  if (it == txns_.end()) return std::nullopt;
  return it->second.phase;
}

std::map<TxnId, SimTime> ShardStore::InDoubt() const {
  std::map<TxnId, SimTime> out;
  for (const auto& [id, st] : txns_)
    if (st.phase != ShardTxnPhase::kActive) out[id] = st.since;
  return out;
}

std::vector<TxnId> ShardStore::ActiveTxns() const {
  std::vector<TxnId> out;
  for (const auto& [id, st] : txns_)
    if (st.phase == ShardTxnPhase::kActive) out.push_back(id);
  return out;
}

void ShardStore::Track(const RedoRecord& r) {
  switch (r.kind) {
    case RedoKind::kWrite: {
      auto [it, inserted] = txns_.emplace(r.txn, TxnState{});
      if (inserted) it->second.since = r.appended_at;
      if (!r.keys.empty() && Distribution::IsDdlKey(r.keys[0])) {
        it->second.ddl = true;
        it->second.table = Distribution::TableOf(r.keys[0]);
      }
      break;
    }
    case RedoKind::kPendingCommit:
      txns_[r.txn].phase = ShardTxnPhase::kPendingCommit;
      txns_[r.txn].since = r.appended_at;
      break;
    case RedoKind::kPrepare:
      txns_[r.txn].phase = ShardTxnPhase::kPrepared;
      break;
    case RedoKind::kHeartbeat:
      break;
    default:
      txns_.erase(r.txn);
      break;
  }
  if (r.carries_commit_ts() && last_committed_ < r.commit_ts) last_committed_ = r.commit_ts;
}

void ShardStore::Recover(SimTime now) {
  table_ = MvccTable{};
  txns_.clear();
  last_committed_ = Timestamp{};
  for (const auto& r : log_) {
    table_.Apply(r);
    Track(r);
  }
  for (TxnId txn : ActiveTxns()) AbortActive(txn, now);
}

}  // namespace geosim
