#include "geosim/ror/node_select.h"

#include <string>

namespace geosim {

ReadRoute SelectNodes(const std::vector<ShardCandidates>& shards,
                      std::optional<uint64_t> staleness_bound_us) {
  ReadRoute route;
  for (const auto& sc : shards) {
    std::vector<NodeMetrics> pool;
    NodeMetrics primary = sc.primary;
    primary.staleness_us = 0;
    if (primary.healthy) pool.push_back(primary);
    bool replicas_allowed = !staleness_bound_us || *staleness_bound_us > 0;
    if (replicas_allowed)
      for (const auto& r : sc.replicas) pool.push_back(r);

    const NodeMetrics* best = nullptr;
    std::vector<NodeMetrics> sky = BuildSkyline(pool);
    for (const auto& m : sky) {
      if (staleness_bound_us && m.staleness_us > *staleness_bound_us) continue;
      if (!best || m.latency_us < best->latency_us) best = &m;
    }
    if (!best) {
      if (!primary.healthy)
        throw ShardUnavailableError("no node can serve shard " + std::to_string(sc.shard));
      best = &primary;
    }
    bool is_primary = best->node == primary.node;
    route.node_for_shard[sc.shard] = best->node;
    route.is_primary[sc.shard] = is_primary;
    route.all_primary = route.all_primary && is_primary;
  }
  return route;
}

}  // namespace geosim
