#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geosim/repl/redo.h"

namespace geosim {

enum class VersionState : uint8_t { kCommitted, kPending, kAborted };

struct VersionedValue {
  std::string key;
  std::string value;
  Timestamp commit_ts;
  TxnId txn = 0;
  VersionState state = VersionState::kPending;
};

// Versions of every key on one shard: committed chains ordered by commit
// timestamp, per-transaction pending writes, key locks held by transactions
// that reached PendingCommit/Prepare, and the table catalog.
class MvccTable {
 public:
  void Stage(TxnId txn, const std::string& key, const std::string& value);
  void Lock(TxnId txn, const std::vector<std::string>& keys);
  // Pending writes become committed at ts; locks are released.
  void Commit(TxnId txn, const Timestamp& ts);
  // Pending writes are dropped; locks are released.
  void Discard(TxnId txn);

  // Committed version with the largest commit_ts <= snapshot.
  const VersionedValue* VisibleAt(const std::string& key, const Timestamp& snapshot) const;
  std::optional<std::string> ReadAt(const std::string& key, const Timestamp& snapshot) const;
  std::optional<std::string> PendingValue(TxnId txn, const std::string& key) const;
  std::vector<std::string> StagedKeys(TxnId txn) const;
  bool HasPending(TxnId txn) const { return pending_.count(txn) != 0; }
  std::optional<TxnId> LockHolder(const std::string& key) const;
  bool IsLocked(TxnId txn) const { return locked_by_.count(txn) != 0; }
  // True when a committed version of key is newer than snapshot.
  bool CommittedAfter(const std::string& key, const Timestamp& snapshot) const;
  const std::vector<VersionedValue>* Versions(const std::string& key) const;

  void SetDdlTs(const std::string& table, const Timestamp& ts);
  const std::map<std::string, Timestamp>& ddl_ts() const { return ddl_ts_; }

  // Applies one redo record's data effect.
  void Apply(const RedoRecord& record);

  size_t lock_count() const { return locks_.size(); }
  size_t pending_txn_count() const { return pending_.size(); }
  std::vector<std::string> keys() const;

 private:
  std::unordered_map<std::string, std::vector<VersionedValue>> committed_;
  std::unordered_map<TxnId, std::map<std::string, std::string>> pending_;
  std::unordered_map<std::string, TxnId> locks_;
  std::unordered_map<TxnId, std::vector<std::string>> locked_by_;
  std::map<std::string, Timestamp> ddl_ts_;
};

}  // namespace geosim
