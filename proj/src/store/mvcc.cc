#include "geosim/store/mvcc.h"

#include <algorithm>

namespace geosim {

void MvccTable::Stage(TxnId txn, const std::string& key, const std::string& value) {
  pending_[txn][key] = value;
}

void MvccTable::Lock(TxnId txn, const std::vector<std::string>& keys) {
  auto& held = locked_by_[txn];
  for (const auto& k : keys) {
    auto [it, inserted] = locks_.emplace(k, txn);
    if (inserted) held.push_back(k);
  }
}

void MvccTable::Commit(TxnId txn, const Timestamp& ts) {
  auto it = pending_.find(txn);
  if (it != pending_.end()) {
    for (auto& [key, value] : it->second) {
      auto& chain = committed_[key];
      VersionedValue v{key, value, ts, txn, VersionState::kCommitted};
      // Commits reach a shard in lsn order, which need not be timestamp order.
      auto pos = std::upper_bound(chain.begin(), chain.end(), ts,
                                  [](const Timestamp& t, const VersionedValue& x) {
                                    return t < x.commit_ts;
                                  });
      chain.insert(pos, std::move(v));
    }
    pending_.erase(it);
  }
  Discard(txn);
}

void MvccTable::Discard(TxnId txn) {
  pending_.erase(txn);
  auto it = locked_by_.find(txn);
  if (it == locked_by_.end()) return;
  for (const auto& k : it->second) {
    auto l = locks_.find(k);
    if (l != locks_.end() && l->second == txn) locks_.erase(l);
  }
  locked_by_.erase(it);
}

const VersionedValue* MvccTable::VisibleAt(const std::string& key,
                                           const Timestamp& snapshot) const {
  auto it = committed_.find(key);
  if (it == committed_.end()) return nullptr;
  const auto& chain = it->second;
  auto pos = std::upper_bound(chain.begin(), chain.end(), snapshot,
                              [](const Timestamp& t, const VersionedValue& x) {
                                return t < x.commit_ts;
                              });
  if (pos == chain.begin()) return nullptr;
  return &*std::prev(pos);
}

std::optional<std::string> MvccTable::ReadAt(const std::string& key,
                                             const Timestamp& snapshot) const {
  const VersionedValue* v = VisibleAt(key, snapshot);
  if (!v) return std::nullopt;
  return v->value;
}

std::optional<std::string> MvccTable::PendingValue(TxnId txn, const std::string& key) const {
  auto it = pending_.find(txn);
  if (it == pending_.end()) return std::nullopt;
  auto k = it->second.find(key);
  if (k == it->second.end()) return std::nullopt;
  return k->second;
}

std::vector<std::string> MvccTable::StagedKeys(TxnId txn) const {
  std::vector<std::string> out;
  auto it = pending_.find(txn);
  if (it == pending_.end()) return out;
  for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

std::optional<TxnId> MvccTable::LockHolder(const std::string& key) const {
  auto it = locks_.find(key);
  if (it == locks_.end()) return std::nullopt;
  return it->second;
}

bool MvccTable::CommittedAfter(const std::string& key, const Timestamp& snapshot) const {
  auto it = committed_.find(key);
  return it != committed_.end() && !it->second.empty() && snapshot < it->second.back().commit_ts;
}

const std::vector<VersionedValue>* MvccTable::Versions(const std::string& key) const {
  auto it = committed_.find(key);
  return it == committed_.end() ? nullptr : &it->second;
}

void MvccTable::SetDdlTs(const std::string& table, const Timestamp& ts) {
  auto [it, inserted] = ddl_ts_.emplace(table, ts);
  if (!inserted && it->second < ts) it->second = ts;
}

void MvccTable::Apply(const RedoRecord& r) {
  switch (r.kind) {
    case RedoKind::kWrite:
      for (const auto& k : r.keys) Stage(r.txn, k, r.payload);
      break;
    case RedoKind::kPendingCommit:
    case RedoKind::kPrepare:
      Lock(r.txn, r.keys);
      break;
    case RedoKind::kCommit:
    case RedoKind::kCommitPrepared:
      Commit(r.txn, r.commit_ts);
      break;
    case RedoKind::kAbort:
    case RedoKind::kAbortPrepared:
      Discard(r.txn);
      break;
    case RedoKind::kDdl:
      Commit(r.txn, r.commit_ts);
      SetDdlTs(r.payload, r.commit_ts);
      break;
    case RedoKind::kHeartbeat:
      break;
  }
}

std::vector<std::string> MvccTable::keys() const {
  std::vector<std::string> out;
  out.reserve(committed_.size());
  for (const auto& [k, v] : committed_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace geosim
