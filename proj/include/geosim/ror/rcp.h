#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>

#include "geosim/sim/simulator.h"
#include "geosim/txn/timestamp.h"

namespace geosim {

struct ReplicaConsistencyPoint {
  Timestamp ts;
  SimTime computed_at = 0;
  uint64_t epoch = 0;
  std::map<NodeId, Timestamp> contributing;
  // Replicas whose state the point covers; only these may serve reads.
  std::set<NodeId> included;
};

// Collector-side RCP bookkeeping for one polling round after another.
//
// A replica that misses a poll keeps its last known value. After
// miss_limit consecutive misses it is excluded, and it rejoins only once
// its max commit timestamp has reached the published floor. The published
// value never decreases. With clamp disabled (a test mutation) neither the
// floor clamp nor the rejoin rule applies.
class RcpCalculator {
 public:
  explicit RcpCalculator(bool clamp = true, uint32_t miss_limit = 3);

  void AddReplica(NodeId replica);
  // Failover: seeds the published floor and epoch.
  void Seed(const Timestamp& floor, uint64_t epoch);

  // Feeds one round of poll replies (nullopt = no reply). Returns the point
  // to publish, or nullopt when the round stalls on an unknown replica.
  std::optional<ReplicaConsistencyPoint> Round(
      const std::map<NodeId, std::optional<Timestamp>>& replies, SimTime now);

  const ReplicaConsistencyPoint& published() const { return published_; }
  bool has_published() const { return has_published_; }
  const std::set<NodeId>& excluded() const { return excluded_; }

 private:
  struct Tracked {
    std::optional<Timestamp> last;
    uint32_t misses = 0;
  };

  bool clamp_;
  uint32_t miss_limit_;
  std::map<NodeId, Tracked> replicas_;
  std::set<NodeId> excluded_;
  ReplicaConsistencyPoint published_;
  bool has_published_ = false;
};

// min over the values; nullopt for an empty map.
std::optional<Timestamp> MinOf(const std::map<NodeId, Timestamp>& values);

}  // namespace geosim
