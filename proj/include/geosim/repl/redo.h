#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geosim/sim/simulator.h"
#include "geosim/txn/timestamp.h"

namespace geosim {

using TxnId = uint64_t;
using ShardId = uint32_t;

enum class RedoKind : uint8_t {
  kWrite = 0,
  kPendingCommit = 1,
  kCommit = 2,
  kPrepare = 3,
  kCommitPrepared = 4,
  kAbort = 5,
  kAbortPrepared = 6,
  kDdl = 7,
  kHeartbeat = 8,
};

const char* RedoKindName(RedoKind kind);
RedoKind ParseRedoKind(const std::string& name);

// One logical change record. Write records carry a single key and the value
// in the payload; PendingCommit and Prepare carry every key the transaction
// touched on the shard; Ddl carries the table name in the payload.
struct RedoRecord {
  uint64_t lsn = 0;
  RedoKind kind = RedoKind::kWrite;
  TxnId txn = 0;
  Timestamp commit_ts;
  std::vector<std::string> keys;
  std::string payload;
  // When the primary appended it; local bookkeeping, not on the wire.
  SimTime appended_at = 0;

  bool carries_commit_ts() const {
    return kind == RedoKind::kCommit || kind == RedoKind::kCommitPrepared ||
           kind == RedoKind::kDdl || kind == RedoKind::kHeartbeat;
  }
};

class RedoDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian, u32 length prefix, then
//   lsn u64 | kind u8 | txn u64 | commit_ts.value u64 | key_count u32 |
//   keys (u32 length + bytes each) | coordinator u32 | local_seq u64 |
//   err u64 | mode u8 | payload (u32 length + bytes)
std::string EncodeRecord(const RedoRecord& record);
// Decodes one record from the front of bytes; *consumed receives the number
// of bytes used including the prefix. Throws RedoDecodeError.
RedoRecord DecodeRecord(std::string_view bytes, size_t* consumed = nullptr);
size_t EncodedSize(const RedoRecord& record);

std::string DescribeRecord(const RedoRecord& record);

}  // namespace geosim
