#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "geosim/repl/redo.h"
#include "geosim/sim/simulator.h"

namespace geosim {

enum class EventKind : uint8_t {
  kInvoke,
  kSnapshot,       // the transaction's snapshot is established
  kCommitRequest,  // the coordinator starts acquiring a commit timestamp
  kCommitVisible,
  kAbort,
  kReadReturn,
  kRcpPublish,
  kModeChange,
};

const char* EventKindName(EventKind kind);
EventKind ParseEventKind(const std::string& name);

enum class RouteKind : uint8_t { kNone, kPrimary, kReplica, kMixed };

const char* RouteKindName(RouteKind kind);
RouteKind ParseRouteKind(const std::string& name);

struct ReadObservation {
  std::string key;
  ShardId shard = 0;
  NodeId node = kNoNode;
  bool replica = false;
  bool own_write = false;
  std::optional<std::string> value;
  Timestamp version;  // commit_ts of the version returned
  // Replica reads: when the replica started serving and how far it had
  // replayed at that moment.
  SimTime served_at = 0;
  uint64_t applied_lsn = 0;
  // Replica reads that waited on an unresolved PendingCommit or Prepare:
  // the first transaction that held the key.
  uint64_t blocked_by = 0;
};

struct HistoryEvent {
  EventKind kind = EventKind::kInvoke;
  SimTime at = 0;
  uint64_t seq = 0;
  uint64_t txn = 0;
  uint32_t client = 0;
  NodeId node = kNoNode;
  Timestamp ts;
  std::vector<std::string> keys;
  std::vector<ReadObservation> reads;
  RouteKind route = RouteKind::kNone;
  bool read_only = false;
  std::optional<uint64_t> staleness_bound_us;
  uint64_t epoch = 0;
  std::string detail;
  std::map<std::string, uint64_t> phases;
};

struct ShardLog {
  ShardId shard = 0;
  std::vector<RedoRecord> records;
};

struct HistoryMeta {
  uint64_t seed = 0;
  SimTime start_us = 0;
  SimTime end_us = 0;
  SimTime metrics_interval_us = 100'000;
  std::string scenario;
};

// Everything the checkers need: events in true-time order plus every
// primary's redo log at the end of the run.
class History {
 public:
  // Assigns the next sequence number and appends.
  HistoryEvent& Record(HistoryEvent event);

  const std::vector<HistoryEvent>& events() const { return events_; }
  std::vector<ShardLog>& logs() { return logs_; }
  const std::vector<ShardLog>& logs() const { return logs_; }
  HistoryMeta& meta() { return meta_; }
  const HistoryMeta& meta() const { return meta_; }

  // Newline-delimited JSON: one meta line, one line per event, one line
  // per redo record.
  void WriteNdjson(std::ostream& out) const;
  // Throws std::runtime_error on malformed input.
  static History ReadNdjson(std::istream& in);

 private:
  std::vector<HistoryEvent> events_;
  std::vector<ShardLog> logs_;
  HistoryMeta meta_;
};

}  // namespace geosim
