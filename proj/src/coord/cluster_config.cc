#include "geosim/coord/cluster_config.h"

#include <stdexcept>

namespace geosim {

namespace {

RegionId RoundRobin(const std::vector<RegionId>& listed, uint32_t i, size_t regions) {
  if (i < listed.size()) return listed[i];
  return static_cast<RegionId>(i % regions);
}

}  // namespace

RegionId TopologyConfig::CnRegion(uint32_t cn) const {
  return RoundRobin(cn_regions, cn, regions.size());
}

RegionId TopologyConfig::ShardRegion(uint32_t shard) const {
  return RoundRobin(shard_regions, shard, regions.size());
}

RegionId TopologyConfig::ReplicaRegion(uint32_t shard, uint32_t j) const {
  auto it = replica_regions.find("rep" + std::to_string(shard) + "_" + std::to_string(j));
  if (it != replica_regions.end()) return it->second;
  return static_cast<RegionId>((ShardRegion(shard) + 1 + j) % regions.size());
}

RegionId TopologyConfig::ClientRegion(uint32_t client) const {
  return RoundRobin(client_regions, client, regions.size());
}

void TopologyConfig::Validate() const {
  if (regions.empty()) throw std::invalid_argument("topology needs at least one region");
  latency.Validate();
  if (latency.regions() != regions.size())
    throw std::invalid_argument("latency matrix has " + std::to_string(latency.regions()) +
                                " rows for " + std::to_string(regions.size()) + " regions");
  if (compute_nodes == 0) throw std::invalid_argument("need at least one compute node");
  if (shards == 0) throw std::invalid_argument("need at least one shard");
  auto check = [&](const std::vector<RegionId>& list, const char* what) {
    for (RegionId r : list)
      if (r >= regions.size())
        throw std::invalid_argument(std::string(what) + " names region " + std::to_string(r) +
                                    " out of range");
  };
  check(cn_regions, "cn_regions");
  check(shard_regions, "shard_regions");
  check(client_regions, "client_regions");
  for (const auto& [name, r] : replica_regions)
    if (r >= regions.size()) throw std::invalid_argument("replica region out of range: " + name);
  if (gtm_region >= regions.size()) throw std::invalid_argument("gtm_region out of range");
}

void ClusterConfig::Validate() const {
  topology.Validate();
  workload.Validate();
  if (duration_us == 0) throw std::invalid_argument("duration must be positive");
  if (clock.sync_interval_us == 0) throw std::invalid_argument("clock sync interval must be positive");
  if (ror.rcp_interval_us == 0 || ror.metrics_interval_us == 0 || ror.heartbeat_interval_us == 0)
    throw std::invalid_argument("ror intervals must be positive");
  if (ror.latency_alpha <= 0.0 || ror.latency_alpha > 1.0)
    throw std::invalid_argument("latency_alpha must be in (0, 1]");
  if (ror.collector >= topology.compute_nodes)
    throw std::invalid_argument("collector index out of range");
  if (modes.initial_mode == TsMode::kDual)
    throw std::invalid_argument("a cluster cannot start in dual mode");
  for (const auto& f : faults)
    if (f.target.empty()) throw std::invalid_argument("fault without target");
}

ClusterConfig ThreeCityConfig() {
  ClusterConfig c;
  c.name = "three_city";
  // Xi'an, Langzhong, Dongguan. Edge figures are round trips.
  const uint64_t xl = 12'500, ld = 17'500, xd = 27'500, intra = 250;
  c.topology.latency.one_way_delay_us = {
      {intra, xl, xd},
      {xl, intra, ld},
      {xd, ld, intra},
  };
  c.topology.latency.jitter_fraction = 0.05;
  c.topology.compute_nodes = 3;
  c.topology.shards = 6;
  c.topology.replicas_per_shard = 2;
  c.topology.gtm_region = 1;
  c.clock.epoch_us = 1'000'000'000;
  return c;
}

}  // namespace geosim
