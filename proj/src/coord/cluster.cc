#include "geosim/coord/cluster.h"

#include <algorithm>

#include "geosim/coord/client.h"
#include "geosim/coord/compute_node.h"
#include "geosim/coord/data_node.h"
#include "geosim/coord/gtm_node.h"
#include "geosim/coord/replica_node.h"

namespace geosim {

namespace {
constexpr SimTime kSliceUs = 100'000;
}

std::optional<Timestamp> DecisionLog::TryDecide(TxnId txn, std::optional<Timestamp> outcome) {
  auto [it, inserted] = decisions_.emplace(txn, outcome);
  (void)inserted;
  return it->second;
}

const std::optional<Timestamp>* DecisionLog::Find(TxnId txn) const {
  auto it = decisions_.find(txn);
  return it == decisions_.end() ? nullptr : &it->second;
}

void Catalog::Record(const std::string& table, const Timestamp& ts) {
  Timestamp& cur = table_ddl_ts[table];
  if (cur < ts) cur = ts;
  if (global_max < ts) global_max = ts;
}

Cluster::Cluster(ClusterConfig config)
    : config_(std::move(config)), dist_(config_.topology.shards) {
  config_.Validate();
  Build();
}

Cluster::~Cluster() = default;

void Cluster::Build() {
  const TopologyConfig& topo = config_.topology;
  sim_ = std::make_unique<Simulator>(topo.latency, config_.seed, config_.start_time_us);
  clocks_ = std::make_unique<ClockService>(*sim_, config_.clock);

  NodeId gtm_id = sim_->AddNode(topo.gtm_region, "gtm");
  gtm_ = std::make_unique<GtmNode>(*this, gtm_id, config_.modes.initial_mode,
                                   config_.modes.enable_dual_wait);
  for (RegionId r = 0; r < topo.regions.size(); ++r)
    clocks_->AddTimeDevice(r, sim_->AddNode(r, "clock" + std::to_string(r)));

  for (uint32_t i = 0; i < topo.compute_nodes; ++i) {
    NodeId id = sim_->AddNode(topo.CnRegion(i), "cn" + std::to_string(i));
    clocks_->AddNode(id);
    cns_.push_back(std::make_unique<ComputeNode>(*this, id, i, config_.modes.initial_mode));
    cn_by_node_[id] = cns_.back().get();
    gtm_->server().RegisterCn(id, config_.modes.initial_mode);
  }
  for (ShardId s = 0; s < topo.shards; ++s) {
    NodeId id = sim_->AddNode(topo.ShardRegion(s), "dn" + std::to_string(s));
    dns_.push_back(std::make_unique<DataNode>(*this, id, s));
  }
  replicas_.resize(topo.shards);
  for (ShardId s = 0; s < topo.shards; ++s) {
    for (uint32_t j = 0; j < topo.replicas_per_shard; ++j) {
      std::string name = "rep" + std::to_string(s) + "_" + std::to_string(j);
      NodeId id = sim_->AddNode(topo.ReplicaRegion(s, j), name);
      uint64_t lag = 0;
      auto it = config_.replication.lag_override_us.find(name);
      if (it != config_.replication.lag_override_us.end()) {
        lag = it->second;
      } else if (config_.replication.random_lag_max_us > 0) {
        lag = static_cast<uint64_t>(
            sim_->UniformInt(0, static_cast<int64_t>(config_.replication.random_lag_max_us)));
      }
      replicas_[s].push_back(std::make_unique<ReplicaNode>(*this, id, s, j, dns_[s]->id()));
      replica_by_node_[id] = replicas_[s].back().get();
      dns_[s]->AttachReplica(id, lag);
    }
  }
  Placement placement;
  for (ShardId s = 0; s < topo.shards; ++s) placement.shard_region.push_back(topo.ShardRegion(s));
  for (uint32_t i = 0; i < config_.workload.clients; ++i) {
    RegionId r = topo.ClientRegion(i);
    placement.client_region.push_back(r);
    NodeId id = sim_->AddNode(r, "client" + std::to_string(i));
    clients_.push_back(std::make_unique<ClientNode>(*this, id, i));
  }
  WorkloadSpec spec = config_.workload;
  spec.duration_us = config_.duration_us;
  workload_ = std::make_unique<WorkloadGenerator>(spec, dist_, placement, config_.seed);

  sim_->AddFaultListener([this](const FaultSpec& f) { OnFault(f); });
}

ComputeNode* Cluster::CnByNode(NodeId node) {
  auto it = cn_by_node_.find(node);
  if (it == cn_by_node_.end()) throw UnknownTargetError("not a compute node: " + std::to_string(node));
  return it->second;
}

ReplicaNode* Cluster::ReplicaByNode(NodeId node) {
  auto it = replica_by_node_.find(node);
  if (it == replica_by_node_.end()) throw UnknownTargetError("not a replica: " + std::to_string(node));
  return it->second;
}

bool Cluster::TakeOpBudget() {
  uint64_t max = config_.workload.max_ops;
  if (max > 0 && ops_issued_ >= max) return false;
  ++ops_issued_;
  return true;
}

void Cluster::NoteModeChange(const std::string& who, TsMode mode) {
  HistoryEvent e;
  e.kind = EventKind::kModeChange;
  e.at = sim_->now();
  e.detail = who + " -> " + TsModeName(mode);
  history_.Record(e);
  mode_log_.push_back(std::to_string(e.at) + " " + e.detail);
}

void Cluster::ScheduleFaults() {
  for (const auto& f : config_.faults) {
    FaultSpec spec;
    spec.kind = f.kind;
    spec.target = sim_->FindNode(f.target);
    spec.peer = f.peer.empty() ? kNoNode : sim_->FindNode(f.peer);
    spec.at = config_.start_time_us + f.at_us;
    spec.clock_offset_us = f.clock_offset_us;
    spec.clock_drift_ppm = f.clock_drift_ppm;
    spec.extra_delay_us = f.extra_delay_us;
    sim_->InjectFault(spec);
  }
}

void Cluster::OnFault(const FaultSpec& f) {
  if (f.kind != FaultKind::kNodeCrash && f.kind != FaultKind::kNodeRecover) return;
  bool crash = f.kind == FaultKind::kNodeCrash;
  if (auto it = cn_by_node_.find(f.target); it != cn_by_node_.end()) {
    crash ? it->second->OnCrash() : it->second->OnRecover();
  } else if (auto rit = replica_by_node_.find(f.target); rit != replica_by_node_.end()) {
    crash ? rit->second->OnCrash() : rit->second->OnRecover();
  } else if (f.target == gtm_->id()) {
    if (!crash) gtm_->OnRecover();
  } else {
    for (auto& dn : dns_)
      if (dn->id() == f.target) crash ? dn->OnCrash() : dn->OnRecover();
  }
}

RunResult Cluster::Run() {
  const SimTime start = config_.start_time_us;
  const SimTime end = start + config_.duration_us;
  HistoryMeta& meta = history_.meta();
  meta.seed = config_.seed;
  meta.start_us = start;
  meta.metrics_interval_us = config_.ror.metrics_interval_us;
  meta.scenario = config_.name;

  gtm_->Start();
  for (auto& dn : dns_) dn->Start();
  for (auto& cn : cns_) cn->Start();
  for (auto& cl : clients_) cl->Start();
  ScheduleFaults();
  for (const auto& tr : config_.modes.transitions) {
    TransitionDirection dir = tr.direction;
    sim_->ScheduleAt(start + tr.at_us, [this, dir] {
      if (!gtm_->StartTransition(dir))
        mode_log_.push_back(std::to_string(sim_->now()) + " transition " + DirectionName(dir) +
                            " skipped");
    });
  }

  SimTime t = start;
  while (t < end) {
    t = std::min(end, t + kSliceUs);
    sim_->RunUntil(t);
    bool done = std::all_of(clients_.begin(), clients_.end(),
                            [](const auto& c) { return c->stopped() && c->idle(); });
    if (done) break;
  }
  meta.end_us = t;
  // Let in-flight work, in-doubt resolution and replication settle.
  const auto& to = config_.timeouts;
  SimTime drain = std::max({to.client_op_us, to.in_doubt_us + 2 * to.inquiry_us + 1'000'000,
                            config_.replication.random_lag_max_us + 1'000'000});
  for (const auto& [name, lag] : config_.replication.lag_override_us)
    drain = std::max(drain, lag + 1'000'000);
  sim_->RunUntil(t + drain);
  sim_->Finish();

  for (auto& dn : dns_) history_.logs().push_back({dn->shard(), dn->store().log()});

  RunResult result;
  result.metrics = ComputeMetrics(history_);
  result.checks = RunCheckers(history_, config_.checks);
  result.clock_readings = clocks_->readings();
  result.clock_envelope_violations = clocks_->envelope_violations();
  result.engine = sim_->totals();
  result.trace_hash = sim_->trace_hash();
  result.mode_log = mode_log_;
  result.history = std::move(history_);
  return result;
}

}  // namespace geosim
