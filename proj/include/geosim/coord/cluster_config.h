#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geosim/clocks/clock_service.h"
#include "geosim/sim/latency.h"
#include "geosim/txn/gtm_server.h"
#include "geosim/verify/checkers.h"
#include "geosim/verify/workload.h"

namespace geosim {

struct TopologyConfig {
  std::vector<std::string> regions = {"xian", "langzhong", "dongguan"};
  LatencyMatrix latency;
  uint32_t compute_nodes = 3;
  uint32_t shards = 6;
  uint32_t replicas_per_shard = 2;
  // Region of each CN / primary; empty means round-robin over regions.
  std::vector<RegionId> cn_regions;
  std::vector<RegionId> shard_regions;
  // Replica j of shard s lives in region (primary region + 1 + j) mod R
  // unless listed here as "rep{s}_{j}" -> region.
  std::map<std::string, RegionId> replica_regions;
  RegionId gtm_region = 1;
  // Clients per CN region are spread round-robin; client i is in this region.
  std::vector<RegionId> client_regions;

  RegionId CnRegion(uint32_t cn) const;
  RegionId ShardRegion(uint32_t shard) const;
  RegionId ReplicaRegion(uint32_t shard, uint32_t j) const;
  RegionId ClientRegion(uint32_t client) const;
  void Validate() const;
};

struct TransitionSpec {
  SimTime at_us = 0;
  TransitionDirection direction = TransitionDirection::kGtmToGClock;
};

struct ModesConfig {
  TsMode initial_mode = TsMode::kGtm;
  bool enable_dual_wait = true;
  std::vector<TransitionSpec> transitions;
};

struct ReplicationConfig {
  // Extra one-way delay per replica name ("rep0_1").
  std::map<std::string, uint64_t> lag_override_us;
  // Each replica without an override draws a lag uniformly from [0, max].
  uint64_t random_lag_max_us = 0;
  bool sync_quorum = false;
  uint64_t read_block_timeout_us = 1'000'000;
};

struct RorConfig {
  bool enabled = true;
  SimTime rcp_interval_us = 50'000;
  SimTime heartbeat_interval_us = 100'000;
  SimTime metrics_interval_us = 100'000;
  bool heartbeats = true;
  uint32_t miss_limit = 3;
  // A CN takes over collection after this much silence times its rank
  // distance from the current collector.
  SimTime collector_timeout_us = 500'000;
  uint32_t collector = 0;
  double latency_alpha = 0.3;
};

struct TimeoutConfig {
  SimTime exec_us = 2'000'000;
  SimTime prepare_us = 2'000'000;
  SimTime gtm_us = 2'000'000;
  SimTime finalize_retry_us = 1'000'000;
  SimTime in_doubt_us = 3'000'000;
  SimTime inquiry_us = 1'000'000;
  SimTime client_op_us = 5'000'000;
};

struct MutationConfig {
  bool disable_commit_wait = false;
  bool disable_rcp_clamp = false;
  bool heartbeat_bypass_log = false;
};

// A fault against a node addressed by name.
struct NamedFault {
  FaultKind kind = FaultKind::kNodeCrash;
  std::string target;
  std::string peer;  // link faults; empty = every peer
  SimTime at_us = 0;
  int64_t clock_offset_us = 0;
  int64_t clock_drift_ppm = 0;
  uint64_t extra_delay_us = 0;
};

struct ClusterConfig {
  std::string name = "cluster";
  uint64_t seed = 1;
  SimTime start_time_us = 0;
  SimTime duration_us = 10'000'000;
  TopologyConfig topology;
  ClockConfig clock;
  ModesConfig modes;
  ReplicationConfig replication;
  RorConfig ror;
  WorkloadSpec workload;
  TimeoutConfig timeouts;
  MutationConfig mutations;
  std::vector<NamedFault> faults;
  CheckToggles checks;
  // Extra one-way delay on every link of the GTM server.
  uint64_t gtm_extra_delay_us = 0;

  void Validate() const;
};

// The three-city deployment: 25/35/55 ms triangle, GTM in Langzhong.
ClusterConfig ThreeCityConfig();

}  // namespace geosim
