#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "geosim/repl/redo.h"
#include "geosim/store/mvcc.h"

namespace geosim {

class LsnGapError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ReplicaReadStatus : uint8_t { kOk, kBlocked, kRejected };

struct ReplicaReadResult {
  ReplicaReadStatus status = ReplicaReadStatus::kOk;
  std::optional<std::string> value;
  Timestamp version;  // commit_ts of the returned version
  TxnId blocker = 0;
};

// Replay state of one replica of one shard.
class ReplicaState {
 public:
  explicit ReplicaState(ShardId shard) : shard_(shard) {}

  ShardId shard() const { return shard_; }

  // Applies the next record. Records at or below applied_lsn are ignored
  // (returns false); a gap throws LsnGapError.
  bool Apply(const RedoRecord& record);

  // MVCC read at snapshot. Snapshots above max_commit_ts are rejected; a key
  // locked by an unresolved PendingCommit/Prepare blocks, since that
  // transaction's timestamp may still land at or below the snapshot.
  ReplicaReadResult ReadAt(const std::string& key, const Timestamp& snapshot) const;

  uint64_t applied_lsn() const { return applied_lsn_; }
  const Timestamp& max_commit_ts() const { return max_commit_ts_; }
  const MvccTable& table() const { return table_; }

  // Raises max_commit_ts without a log record. Only the heartbeat-bypass
  // mutation uses this.
  void ForceMaxCommitTs(const Timestamp& ts);

 private:
  ShardId shard_;
  uint64_t applied_lsn_ = 0;
  Timestamp max_commit_ts_;
  MvccTable table_;
};

}  // namespace geosim
