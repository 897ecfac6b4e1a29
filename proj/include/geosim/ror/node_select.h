#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geosim/repl/redo.h"
#include "geosim/ror/skyline.h"

namespace geosim {

class ShardUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShardCandidates {
  ShardId shard = 0;
  // The primary is always fresh; its staleness entry is ignored.
  NodeMetrics primary;
  std::vector<NodeMetrics> replicas;
};

struct ReadRoute {
  std::map<ShardId, NodeId> node_for_shard;
  std::map<ShardId, bool> is_primary;
  bool all_primary = true;
};

// Per shard: the skyline over the healthy primary and replicas, then the
// lowest-latency member whose staleness is within the bound. No bound means
// any staleness; a zero bound admits only the primary. Throws
// ShardUnavailableError when no healthy node can serve a shard.
ReadRoute SelectNodes(const std::vector<ShardCandidates>& shards,
                      std::optional<uint64_t> staleness_bound_us);

}  // namespace geosim
