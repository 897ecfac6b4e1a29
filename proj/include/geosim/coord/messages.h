#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geosim/repl/redo.h"
#include "geosim/verify/history.h"
#include "geosim/verify/workload.h"

namespace geosim {

// Approximate wire sizes; only the bandwidth model looks at them.
inline constexpr size_t kSmallMsg = 64;

inline size_t KeysBytes(const std::vector<std::string>& keys) {
  size_t n = kSmallMsg;
  for (const auto& k : keys) n += k.size() + 4;
  return n;
}

struct ClientRequest {
  Operation op;
  NodeId client_node = kNoNode;
  // Session state the client carries between CNs.
  Timestamp last_commit;
  Timestamp last_snapshot;  // highest replica-read snapshot seen
  NodeId last_cn = kNoNode;  // CN that served the previous operation
};

enum class OpOutcome : uint8_t { kCommitted, kAborted, kAnswered };

struct ClientReply {
  uint64_t op_id = 0;
  OpOutcome outcome = OpOutcome::kAborted;
  Timestamp commit_ts;
  // Snapshot of an answered query and whether replicas served it.
  Timestamp snapshot;
  bool replica_route = false;
  std::string reason;
};

struct ExecRequest {
  TxnId txn = 0;
  NodeId cn = kNoNode;
  uint32_t client = 0;
  std::vector<std::string> reads;
  std::vector<std::pair<std::string, std::string>> writes;
  Timestamp snapshot;
  // Single-shard GClock transactions take the shard's last commit as snapshot.
  bool bypass = false;
  // Read-only queries at a primary only read.
  bool read_only = false;
  // DDL: stage the table's DDL key instead of writes.
  std::string ddl_table;
};

struct ExecReply {
  TxnId txn = 0;
  ShardId shard = 0;
  NodeId node = kNoNode;
  Timestamp snapshot;
  std::vector<ReadObservation> reads;
  bool ok = true;
  std::string reason;
};

struct ReplicaReadReply {
  uint64_t query = 0;
  ShardId shard = 0;
  NodeId node = kNoNode;
  bool ok = true;
  std::string reason;  // "rejected" or "timeout"
  std::vector<ReadObservation> reads;
};

}  // namespace geosim
