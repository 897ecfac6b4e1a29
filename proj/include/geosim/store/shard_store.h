#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geosim/repl/redo.h"
#include "geosim/store/distribution.h"
#include "geosim/store/mvcc.h"

namespace geosim {

class UnknownTxnError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ShardTxnPhase : uint8_t { kActive, kPendingCommit, kPrepared };

// Primary copy of one shard. Every mutation appends exactly one redo record
// (a two-phase prepare appends PendingCommit then Prepare) in mutation order.
class ShardStore {
 public:
  explicit ShardStore(ShardId shard, const Distribution* dist = nullptr);

  ShardId shard() const { return shard_; }

  // Throws RoutingError when the key belongs to another shard.
  void StageWrite(TxnId txn, const std::string& key, const std::string& value, SimTime now = 0);
  // DDL intent: stages the table's DDL key on this shard.
  void StageDdl(TxnId txn, const std::string& table, SimTime now = 0);

  std::optional<std::string> ReadAt(const std::string& key, const Timestamp& snapshot) const;
  // The transaction's own staged value, if any.
  std::optional<std::string> ReadOwn(TxnId txn, const std::string& key) const;
  std::optional<TxnId> LockHolder(const std::string& key) const { return table_.LockHolder(key); }

  // First-committer-wins validation against the transaction's snapshot.
  // Conflict-free: appends PendingCommit (and Prepare when two_phase), locks
  // the keys and returns true. Otherwise appends Abort, drops the staged
  // writes and returns false.
  bool Prepare(TxnId txn, const Timestamp& snapshot, bool two_phase, SimTime now = 0);
  // Commit at ts, or abort when ts is empty. Appends Commit / CommitPrepared /
  // Ddl or Abort / AbortPrepared. Throws UnknownTxnError.
  void Finalize(TxnId txn, const std::optional<Timestamp>& commit_ts, SimTime now = 0);
  // Abandons a transaction that never reached prepare.
  void AbortActive(TxnId txn, SimTime now = 0);
  void AppendHeartbeat(const Timestamp& ts, SimTime now = 0);

  bool Knows(TxnId txn) const { return txns_.count(txn) != 0; }
  std::optional<ShardTxnPhase> phase(TxnId txn) const;
  // Transactions in PendingCommit/Prepared with the time they got there.
  std::map<TxnId, SimTime> InDoubt() const;
  std::vector<TxnId> ActiveTxns() const;

  // Largest commit or heartbeat timestamp applied so far.
  const Timestamp& last_committed_ts() const { return last_committed_; }
  const std::vector<RedoRecord>& log() const { return log_; }
  const MvccTable& table() const { return table_; }

  // Rebuilds volatile state from the durable log after a crash. Transactions
  // that never reached PendingCommit are aborted (and logged as such).
  void Recover(SimTime now = 0);

 private:
  struct TxnState {
    ShardTxnPhase phase = ShardTxnPhase::kActive;
    bool ddl = false;
    std::string table;
    SimTime since = 0;
  };

  RedoRecord& Append(RedoKind kind, TxnId txn, SimTime now);
  void Track(const RedoRecord& record);

  ShardId shard_;
  const Distribution* dist_;
  MvccTable table_;
  std::vector<RedoRecord> log_;
  std::map<TxnId, TxnState> txns_;
  Timestamp last_committed_;
};

}  // namespace geosim
