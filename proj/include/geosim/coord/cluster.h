#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geosim/clocks/clock_service.h"
#include "geosim/coord/cluster_config.h"
#include "geosim/sim/simulator.h"
#include "geosim/store/distribution.h"
#include "geosim/verify/checkers.h"
#include "geosim/verify/history.h"
#include "geosim/verify/metrics.h"
#include "geosim/verify/workload.h"

namespace geosim {

class ComputeNode;
class DataNode;
class ReplicaNode;
class GtmNode;
class ClientNode;

// Write-once record of 2PC outcomes that survives coordinator crashes.
class DecisionLog {
 public:
  // Records outcome (nullopt = abort) unless one exists; returns the
  // outcome that holds.
  std::optional<Timestamp> TryDecide(TxnId txn, std::optional<Timestamp> outcome);
  // nullptr when undecided.
  const std::optional<Timestamp>* Find(TxnId txn) const;

 private:
  std::map<TxnId, std::optional<Timestamp>> decisions_;
};

// Committed DDL timestamps, shared by every CN.
struct Catalog {
  std::map<std::string, Timestamp> table_ddl_ts;
  Timestamp global_max;

  void Record(const std::string& table, const Timestamp& ts);
};

struct RunResult {
  History history;
  MetricsReport metrics;
  CheckReport checks;
  uint64_t clock_readings = 0;
  uint64_t clock_envelope_violations = 0;
  EngineStats engine;
  uint64_t trace_hash = 0;
  std::vector<std::string> mode_log;
};

class Cluster {
 public:
  explicit Cluster(ClusterConfig config);
  ~Cluster();

  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  // Runs the configured workload, faults and transitions, then checks.
  RunResult Run();

  Simulator& sim() { return *sim_; }
  ClockService& clocks() { return *clocks_; }
  History& history() { return history_; }
  const ClusterConfig& config() const { return config_; }
  const Distribution& dist() const { return dist_; }
  DecisionLog& decisions() { return decisions_; }
  Catalog& catalog() { return catalog_; }

  GtmNode& gtm() { return *gtm_; }
  std::vector<std::unique_ptr<ComputeNode>>& cns() { return cns_; }
  std::vector<std::unique_ptr<DataNode>>& dns() { return dns_; }
  // replicas()[shard][j]
  std::vector<std::vector<std::unique_ptr<ReplicaNode>>>& replicas() { return replicas_; }
  std::vector<std::unique_ptr<ClientNode>>& clients() { return clients_; }
  WorkloadGenerator& workload() { return *workload_; }

  ComputeNode* CnByNode(NodeId node);
  DataNode& Primary(ShardId shard) { return *dns_.at(shard); }
  ReplicaNode* ReplicaByNode(NodeId node);
  uint32_t RegionCount() const { return static_cast<uint32_t>(config_.topology.regions.size()); }

  TxnId NextTxnId() { return ++txn_counter_; }
  // Global operation budget (max_ops); false once exhausted.
  bool TakeOpBudget();
  void NoteModeChange(const std::string& who, TsMode mode);

 private:
  void Build();
  void ScheduleFaults();
  void OnFault(const FaultSpec& spec);

  ClusterConfig config_;
  std::unique_ptr<Simulator> sim_;
  std::unique_ptr<ClockService> clocks_;
  Distribution dist_;
  History history_;
  DecisionLog decisions_;
  Catalog catalog_;
  std::unique_ptr<GtmNode> gtm_;
  std::vector<std::unique_ptr<ComputeNode>> cns_;
  std::vector<std::unique_ptr<DataNode>> dns_;
  std::vector<std::vector<std::unique_ptr<ReplicaNode>>> replicas_;
  std::vector<std::unique_ptr<ClientNode>> clients_;
  std::unique_ptr<WorkloadGenerator> workload_;
  std::map<NodeId, ComputeNode*> cn_by_node_;
  std::map<NodeId, ReplicaNode*> replica_by_node_;
  TxnId txn_counter_ = 0;
  uint64_t ops_issued_ = 0;
  std::vector<std::string> mode_log_;
};

}  // namespace geosim
