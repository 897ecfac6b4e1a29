#include "geosim/coord/compute_node.h"

#include <algorithm>
#include <limits>

#include "geosim/coord/client.h"
#include "geosim/coord/cluster.h"
#include "geosim/coord/data_node.h"
#include "geosim/coord/gtm_node.h"
#include "geosim/coord/replica_node.h"
#include "geosim/ror/ddl_gate.h"

namespace geosim {

namespace {
constexpr uint64_t kUnknownStaleness = std::numeric_limits<uint64_t>::max() / 4;
constexpr TxnId kHeartbeatBase = TxnId{1} << 62;
}  // namespace

ComputeNode::ComputeNode(Cluster& cluster, NodeId id, uint32_t index, TsMode mode)
    : c_(cluster),
      id_(id),
      index_(index),
      mode_(mode),
      rate_(cluster.config().ror.metrics_interval_us) {}

ComputeNode::~ComputeNode() = default;

void ComputeNode::Start() {
  const auto& ror = c_.config().ror;
  started_at_ = c_.sim().now();
  last_publication_at_ = started_at_;
  collector_ = c_.cns().at(ror.collector)->id();
  if (ror.enabled && index_ == ror.collector) {
    collecting_ = true;
    epoch_ = 1;
    calc_ = std::make_unique<RcpCalculator>(!c_.config().mutations.disable_rcp_clamp,
                                            ror.miss_limit);
    for (auto& shard : c_.replicas())
      for (auto& r : shard) calc_->AddReplica(r->id());
  }
  StartTimers();
}

void ComputeNode::StartTimers() {
  const auto& ror = c_.config().ror;
  if (!ror.enabled) return;
  c_.sim().Schedule(0, [this] { ProbeTick(); }, id_, "cn_probe");
  c_.sim().Schedule(ror.rcp_interval_us, [this] { RcpTick(); }, id_, "cn_rcp");
  c_.sim().Schedule(ror.heartbeat_interval_us, [this] { HeartbeatTick(); }, id_, "cn_heartbeat");
}

void ComputeNode::OnCrash() {
  txns_.clear();
  probes_.clear();
  rate_ = IssueRateTracker(c_.config().ror.metrics_interval_us);
  rcp_.reset();
  epoch_ = 0;
  collector_ = kNoNode;
  collecting_ = false;
  seeding_ = false;
  calc_.reset();
  poll_replies_.clear();
  seed_floor_.reset();
  floor_waiting_.clear();
  ready_ = false;
}

void ComputeNode::OnRecover() {
  started_at_ = c_.sim().now();
  last_publication_at_ = started_at_;
  NodeId me = id_;
  GtmNode& gtm = c_.gtm();
  c_.sim().Send(id_, gtm.id(), kSmallMsg, [&gtm, me] { gtm.OnAdopt(me); }, "adopt",
                gtm.extra_delay_us());
  StartTimers();
}

void ComputeNode::OnAdoptReply(TsMode mode) {
  mode_ = mode;
  ready_ = true;
  c_.NoteModeChange(c_.sim().name_of(id_) + " (rejoined)", mode_);
}

void ComputeNode::OnSwitchMode(TsMode mode) {
  ready_ = true;
  if (mode_ != mode) {
    mode_ = mode;
    c_.NoteModeChange(c_.sim().name_of(id_), mode_);
  }
  NodeId me = id_;
  GtmNode& gtm = c_.gtm();
  if (mode == TsMode::kDual) {
    std::optional<ClockReading> reading;
    if (c_.clocks().healthy(id_)) reading = c_.clocks().Read(id_);
    uint64_t issued = max_gclock_issued_;
    c_.sim().Send(id_, gtm.id(), kSmallMsg,
                  [&gtm, me, issued, reading] { gtm.OnDualAck(me, issued, reading); }, "dual_ack",
                  gtm.extra_delay_us());
  } else {
    c_.sim().Send(id_, gtm.id(), kSmallMsg, [&gtm, me] { gtm.OnTargetAck(me); }, "target_ack",
                  gtm.extra_delay_us());
  }
}

ComputeNode::Txn* ComputeNode::Find(TxnId id) {
  auto it = txns_.find(id);
  return it == txns_.end() ? nullptr : &it->second;
}

HistoryEvent ComputeNode::Event(const Txn& t, EventKind kind) const {
  HistoryEvent e;
  e.kind = kind;
  e.at = c_.sim().now();
  e.txn = t.id;
  e.client = t.req.op.client;
  e.node = id_;
  e.read_only = t.query;
  return e;
}

void ComputeNode::Arm(Txn& t, SimTime timeout, const std::string& reason) {
  if (t.timer) c_.sim().Cancel(t.timer);
  TxnId id = t.id;
  t.timer = c_.sim().Schedule(
      timeout,
      [this, id, reason] {
        Txn* t = Find(id);
        if (!t || t->decided) return;
        t->timer = 0;
        Abort(*t, reason);
      },
      id_, "txn_timeout");
}

void ComputeNode::EndPhase(Txn& t, const char* name) {
  SimTime now = c_.sim().now();
  t.phases[name] = now - t.phase_start;
  t.phase_start = now;
}

std::optional<ClockReading> ComputeNode::ReadClock(Txn* t) {
  if (c_.clocks().healthy(id_)) return c_.clocks().Read(id_);
  // Fall back to centralized timestamps while this clock is unusable.
  GtmNode& gtm = c_.gtm();
  c_.sim().Send(id_, gtm.id(), kSmallMsg,
                [&gtm] { gtm.StartTransition(TransitionDirection::kGClockToGtm); },
                "transition_request", gtm.extra_delay_us());
  if (t) Abort(*t, "clock_unhealthy");
  return std::nullopt;
}

void ComputeNode::RequestGtm(Txn& t, TsPurpose purpose, std::optional<ClockReading> reading,
                             TsCallback then) {
  TsRequest req;
  req.purpose = purpose;
  req.cn_mode = mode_;
  req.begun_mode = t.begun_mode;
  req.gclock = reading;
  req.coordinator = index_;
  req.local_seq = NextSeq();
  TxnId id = t.id;
  NodeId me = id_;
  GtmNode& gtm = c_.gtm();
  auto on_grant = [this, id, then](const TsGrant& g) {
    rate_.Observe(c_.sim().now(), g.counter);
    Txn* t = Find(id);
    if (!t) return;
    if (g.aborted) {
      Abort(*t, "stale_gtm");
      return;
    }
    if (g.ts.mode != TsMode::kGtm) max_gclock_issued_ = std::max(max_gclock_issued_, g.ts.value);
    then(*t, g.ts, g.wait_us);
  };
  c_.sim().Send(id_, gtm.id(), kSmallMsg, [&gtm, me, req, on_grant] { gtm.OnRequest(me, req, on_grant); },
                "ts_request", gtm.extra_delay_us());
}

void ComputeNode::OnClientRequest(const ClientRequest& req) {
  if (!ready_) {
    ClientReply r;
    r.op_id = req.op.id;
    r.outcome = OpOutcome::kAborted;
    r.reason = "cn_not_ready";
    ClientNode* client = c_.clients().at(req.op.client).get();
    c_.sim().Send(id_, req.client_node, kSmallMsg, [client, r] { client->OnReply(r); },
                  "client_reply");
    return;
  }
  TxnId id = req.op.id + 1;
  if (txns_.count(id)) return;
  Txn& t = txns_[id];
  t.id = id;
  t.req = req;
  t.phase_start = c_.sim().now();
  if (req.op.kind == OpKind::kReadOnly) {
    StartQuery(t);
  } else {
    BeginTxn(t);
  }
}

void ComputeNode::BeginTxn(Txn& t) {
  const Operation& op = t.req.op;
  const Distribution& dist = c_.dist();
  std::string value = "v" + std::to_string(t.id);
  for (const auto& k : op.reads) t.work[dist.ShardOf(k)].reads.push_back(k);
  for (const auto& k : op.writes) {
    ShardId s = dist.ShardOf(k);
    t.work[s].writes.emplace_back(k, value);
    t.write_shards.insert(s);
  }
  if (op.kind == OpKind::kDdl) {
    for (ShardId s = 0; s < dist.shard_count(); ++s) {
      t.work[s].ddl_table = op.table;
      t.write_shards.insert(s);
    }
  }
  t.begun_mode = mode_;
  t.bypass = mode_ == TsMode::kGClock && t.work.size() == 1 && op.kind != OpKind::kDdl;
  Arm(t, c_.config().timeouts.gtm_us, "timeout_snapshot");
  AcquireSnapshot(t, [this](Txn& t) { SendExec(t); });
}

void ComputeNode::AcquireSnapshot(Txn& t, std::function<void(Txn&)> then) {
  t.stage = Stage::kSnapshot;
  TxnId id = t.id;
  bool dual_wait = c_.config().modes.enable_dual_wait;
  switch (mode_) {
    case TsMode::kGClock: {
      if (t.bypass) {
        then(t);
        return;
      }
      auto r = ReadClock(&t);
      if (!r) return;
      Timestamp ts{GClockValue(*r), r->t_err, TsMode::kGClock, index_, NextSeq()};
      max_gclock_issued_ = std::max(max_gclock_issued_, ts.value);
      c_.clocks().WaitUntilLowerBoundExceeds(id_, ts.value, [this, id, ts, then] {
        if (Txn* t = Find(id)) EstablishSnapshot(*t, ts, then);
      });
      return;
    }
    case TsMode::kDual: {
      auto r = ReadClock(&t);
      if (!r) return;
      RequestGtm(t, TsPurpose::kSnapshot, r,
                 [this, dual_wait, then](Txn& t, const Timestamp& ts, uint64_t) {
                   if (!dual_wait) {
                     EstablishSnapshot(t, ts, then);
                     return;
                   }
                   TxnId id = t.id;
                   c_.clocks().WaitUntilLowerBoundExceeds(id_, ts.value, [this, id, ts, then] {
                     if (Txn* t = Find(id)) EstablishSnapshot(*t, ts, then);
                   });
                 });
      return;
    }
    case TsMode::kGtm:
      RequestGtm(t, TsPurpose::kSnapshot, std::nullopt,
                 [this, then](Txn& t, const Timestamp& ts, uint64_t) {
                   EstablishSnapshot(t, ts, then);
                 });
      return;
  }
}

void ComputeNode::EstablishSnapshot(Txn& t, const Timestamp& ts,
                                    std::function<void(Txn&)> then) {
  t.snapshot = ts;
  HistoryEvent e = Event(t, EventKind::kSnapshot);
  e.ts = ts;
  c_.history().Record(std::move(e));
  then(t);
}

void ComputeNode::SendExec(Txn& t) {
  t.stage = Stage::kExec;
  Arm(t, c_.config().timeouts.exec_us, t.query ? "timeout_query" : "timeout_exec");
  for (auto& [shard, req] : t.work) {
    req.txn = t.id;
    req.cn = id_;
    req.client = t.req.op.client;
    req.snapshot = t.snapshot;
    req.bypass = t.bypass;
    req.read_only = t.query;
    t.waiting.insert(shard);
    size_t bytes = KeysBytes(req.reads);
    for (const auto& [k, v] : req.writes) bytes += k.size() + v.size() + 8;
    DataNode* dn = &c_.Primary(shard);
    ExecRequest copy = req;
    c_.sim().Send(id_, dn->id(), bytes, [dn, copy] { dn->OnExec(copy); }, "exec");
  }
}

void ComputeNode::OnExecReply(const ExecReply& r) {
  Txn* t = Find(r.txn);
  if (!t || t->stage != Stage::kExec || !t->waiting.count(r.shard)) return;
  if (!r.ok) {
    Abort(*t, "exec_" + r.reason);
    return;
  }
  t->reads.insert(t->reads.end(), r.reads.begin(), r.reads.end());
  if (t->bypass) t->snapshot = r.snapshot;
  t->waiting.erase(r.shard);
  if (!t->waiting.empty()) return;
  if (t->query) {
    FinishQuery(*t);
    return;
  }
  HistoryEvent e = Event(*t, EventKind::kReadReturn);
  e.ts = t->snapshot;
  e.reads = t->reads;
  e.route = RouteKind::kNone;
  c_.history().Record(std::move(e));
  EndPhase(*t, "exec");
  if (t->write_shards.empty()) {
    if (t->timer) c_.sim().Cancel(t->timer);
    Reply(*t, OpOutcome::kAnswered, "");
    txns_.erase(t->id);
    return;
  }
  StartPrepare(*t);
}

void ComputeNode::StartPrepare(Txn& t) {
  t.stage = Stage::kPrepare;
  Arm(t, c_.config().timeouts.prepare_us, "timeout_prepare");
  bool two_phase = t.write_shards.size() > 1;
  TxnId id = t.id;
  NodeId me = id_;
  Timestamp snap = t.snapshot;
  for (ShardId s : t.write_shards) {
    t.waiting.insert(s);
    DataNode* dn = &c_.Primary(s);
    c_.sim().Send(id_, dn->id(), kSmallMsg,
                  [dn, id, me, snap, two_phase] { dn->OnPrepare(id, me, snap, two_phase); },
                  "prepare");
  }
}

void ComputeNode::OnPrepareReply(TxnId txn, ShardId shard, bool ok) {
  Txn* t = Find(txn);
  if (!t || t->stage != Stage::kPrepare || !t->waiting.count(shard)) return;
  if (!ok) {
    Abort(*t, "conflict");
    return;
  }
  t->waiting.erase(shard);
  if (!t->waiting.empty()) return;
  EndPhase(*t, "prepare");
  AcquireCommitTs(*t);
}

void ComputeNode::AcquireCommitTs(Txn& t) {
  if (t.begun_mode == TsMode::kGtm && mode_ == TsMode::kGClock) {
    Abort(t, "stale_gtm");
    return;
  }
  if (!t.heartbeat) c_.history().Record(Event(t, EventKind::kCommitRequest));
  t.stage = Stage::kTimestamp;
  Arm(t, c_.config().timeouts.gtm_us, "timeout_timestamp");
  const bool skip = c_.config().mutations.disable_commit_wait;
  const bool dual_wait = c_.config().modes.enable_dual_wait;
  TxnId id = t.id;
  auto granted = [this](Txn& t, const Timestamp& ts) {
    if (t.timer) c_.sim().Cancel(t.timer);
    t.timer = 0;
    t.commit_ts = ts;
    EndPhase(t, "timestamp");
  };
  switch (mode_) {
    case TsMode::kGClock: {
      auto r = ReadClock(&t);
      if (!r) return;
      Timestamp ts{GClockValue(*r), r->t_err, TsMode::kGClock, index_, NextSeq()};
      max_gclock_issued_ = std::max(max_gclock_issued_, ts.value);
      granted(t, ts);
      if (skip) {
        AfterCommitWait(id);
      } else {
        c_.clocks().WaitUntilLowerBoundExceeds(id_, ts.value, [this, id] { AfterCommitWait(id); });
      }
      return;
    }
    case TsMode::kDual: {
      auto r = ReadClock(&t);
      if (!r) return;
      RequestGtm(t, TsPurpose::kCommit, r,
                 [this, skip, dual_wait, granted](Txn& t, const Timestamp& ts, uint64_t wait) {
                   granted(t, ts);
                   TxnId id = t.id;
                   if (skip) {
                     AfterCommitWait(id);
                     return;
                   }
                   c_.sim().Schedule(
                       wait,
                       [this, id, ts, dual_wait] {
                         if (!dual_wait) {
                           AfterCommitWait(id);
                           return;
                         }
                         c_.clocks().WaitUntilLowerBoundExceeds(id_, ts.value,
                                                                [this, id] { AfterCommitWait(id); });
                       },
                       id_, "commit_wait");
                 });
      return;
    }
    case TsMode::kGtm:
      RequestGtm(t, TsPurpose::kCommit, std::nullopt,
                 [this, skip, granted](Txn& t, const Timestamp& ts, uint64_t wait) {
                   granted(t, ts);
                   TxnId id = t.id;
                   if (skip || wait == 0) {
                     AfterCommitWait(id);
                     return;
                   }
                   c_.sim().Schedule(wait, [this, id] { AfterCommitWait(id); }, id_,
                                     "commit_wait");
                 });
      return;
  }
}

void ComputeNode::AfterCommitWait(TxnId id) {
  Txn* t = Find(id);
  if (!t) return;
  EndPhase(*t, "wait");
  if (t->heartbeat) {
    const bool bypass = c_.config().mutations.heartbeat_bypass_log;
    Timestamp ts = t->commit_ts;
    for (ShardId s = 0; s < c_.dist().shard_count(); ++s) {
      if (bypass) {
        for (auto& r : c_.replicas().at(s)) {
          ReplicaNode* rep = r.get();
          c_.sim().Send(id_, rep->id(), kSmallMsg, [rep, ts] { rep->OnForceMaxCommit(ts); },
                        "heartbeat");
        }
      } else {
        DataNode* dn = &c_.Primary(s);
        c_.sim().Send(id_, dn->id(), kSmallMsg, [dn, ts] { dn->OnHeartbeat(ts); }, "heartbeat");
      }
    }
    txns_.erase(id);
    return;
  }
  auto outcome = c_.decisions().TryDecide(id, t->commit_ts);
  if (!outcome) {
    Abort(*t, "presumed_abort");
    return;
  }
  t->decided = true;
  t->stage = Stage::kFinalize;
  t->waiting = t->write_shards;
  SendFinalize(*t, true);
  c_.sim().Schedule(c_.config().timeouts.finalize_retry_us, [this, id] { FinalizeRetry(id); }, id_,
                    "finalize_retry");
}

void ComputeNode::SendFinalize(Txn& t, bool commit) {
  std::optional<Timestamp> ts;
  if (commit) ts = t.commit_ts;
  TxnId id = t.id;
  NodeId me = id_;
  const auto& targets = commit ? t.waiting : t.write_shards;
  for (ShardId s : targets) {
    DataNode* dn = &c_.Primary(s);
    c_.sim().Send(id_, dn->id(), kSmallMsg, [dn, id, me, ts] { dn->OnFinalize(id, me, ts); },
                  "finalize");
  }
}

void ComputeNode::FinalizeRetry(TxnId id) {
  Txn* t = Find(id);
  if (!t || t->stage != Stage::kFinalize || t->waiting.empty()) return;
  SendFinalize(*t, true);
  c_.sim().Schedule(c_.config().timeouts.finalize_retry_us, [this, id] { FinalizeRetry(id); }, id_,
                    "finalize_retry");
}

void ComputeNode::OnFinalizeAck(TxnId txn, ShardId shard) {
  Txn* t = Find(txn);
  if (!t || t->stage != Stage::kFinalize) return;
  t->waiting.erase(shard);
  if (t->waiting.empty()) CompleteCommit(*t);
}

void ComputeNode::CompleteCommit(Txn& t) {
  EndPhase(t, "finalize");
  const Operation& op = t.req.op;
  HistoryEvent e = Event(t, EventKind::kCommitVisible);
  e.ts = t.commit_ts;
  e.phases = t.phases;
  if (op.kind == OpKind::kDdl) {
    e.keys.push_back(Distribution::DdlKey(op.table));
    e.detail = "ddl " + op.table;
    c_.catalog().Record(op.table, t.commit_ts);
  } else {
    e.keys = op.writes;
  }
  c_.history().Record(std::move(e));
  Reply(t, OpOutcome::kCommitted, "");
  txns_.erase(t.id);
}

void ComputeNode::Abort(Txn& t, const std::string& reason) {
  TxnId id = t.id;
  if (t.timer) c_.sim().Cancel(t.timer);
  if (t.heartbeat) {
    txns_.erase(id);
    return;
  }
  if (t.stage >= Stage::kPrepare) c_.decisions().TryDecide(id, std::nullopt);
  HistoryEvent e = Event(t, EventKind::kAbort);
  e.detail = reason;
  c_.history().Record(std::move(e));
  if (!t.query && t.stage >= Stage::kExec) SendFinalize(t, false);
  Reply(t, OpOutcome::kAborted, reason);
  txns_.erase(id);
}

void ComputeNode::Reply(const Txn& t, OpOutcome outcome, const std::string& reason) {
  ClientReply r;
  r.op_id = t.req.op.id;
  r.outcome = outcome;
  r.reason = reason;
  if (outcome == OpOutcome::kCommitted) r.commit_ts = t.commit_ts;
  if (outcome == OpOutcome::kAnswered) {
    r.snapshot = t.snapshot;
    r.replica_route = t.route == RouteKind::kReplica || t.route == RouteKind::kMixed;
  }
  ClientNode* client = c_.clients().at(t.req.op.client).get();
  c_.sim().Send(id_, t.req.client_node, kSmallMsg, [client, r] { client->OnReply(r); },
                "client_reply");
}

void ComputeNode::OnInquiry(TxnId txn, NodeId dn) {
  Txn* t = Find(txn);
  if (t && !c_.decisions().Find(txn)) return;  // still working on it
  auto outcome = c_.decisions().TryDecide(txn, std::nullopt);
  DataNode* node = nullptr;
  for (auto& d : c_.dns())
    if (d->id() == dn) node = d.get();
  if (!node) return;
  c_.sim().Send(id_, dn, kSmallMsg, [node, txn, outcome] { node->OnResolve(txn, outcome); },
                "resolve");
}

// ---------------------------------------------------------------- queries

void ComputeNode::StartQuery(Txn& t) {
  t.query = true;
  const Operation& op = t.req.op;
  const auto& cfg = c_.config();
  std::set<ShardId> shards;
  std::set<std::string> tables;
  for (const auto& k : op.reads) {
    ShardId s = c_.dist().ShardOf(k);
    shards.insert(s);
    t.work[s].reads.push_back(k);
    tables.insert(Distribution::TableOf(k));
  }
  bool replica_ok = cfg.ror.enabled && op.replica_reads && rcp_.has_value() &&
                    cfg.topology.replicas_per_shard > 0;
  // Optional read-your-writes: the RCP must cover the session's last commit.
  if (replica_ok && cfg.workload.read_your_writes && rcp_->ts < t.req.last_commit)
    replica_ok = false;
  // A session arriving from another CN keeps the freshness it already saw.
  if (replica_ok && t.req.last_cn != kNoNode && t.req.last_cn != id_ &&
      rcp_->ts < t.req.last_snapshot)
    replica_ok = false;
  if (replica_ok) {
    const Catalog& cat = c_.catalog();
    if (!Allowed(DdlGate(tables, rcp_->ts, cat.table_ddl_ts, cat.global_max))) replica_ok = false;
  }
  if (!replica_ok) {
    RouteOnPrimaries(t);
    return;
  }
  ReadRoute route;
  try {
    route = SelectNodes(Candidates(shards), op.staleness_bound_us);
  } catch (const ShardUnavailableError&) {
    Abort(t, "shard_unavailable");
    return;
  }
  if (route.all_primary) {
    RouteOnPrimaries(t);
    return;
  }
  t.snapshot = rcp_->ts;
  t.epoch = rcp_->epoch;
  t.route = RouteKind::kReplica;
  for (const auto& [s, primary] : route.is_primary)
    if (primary) t.route = RouteKind::kMixed;
  t.stage = Stage::kExec;
  Arm(t, cfg.timeouts.exec_us, "timeout_query");
  for (const auto& [s, node] : route.node_for_shard) {
    const auto& keys = t.work[s].reads;
    if (route.is_primary.at(s)) {
      SendPrimaryRead(t, s, keys);
    } else {
      SendReplicaRead(t, s, node, keys);
    }
  }
}

void ComputeNode::RouteOnPrimaries(Txn& t) {
  t.route = RouteKind::kPrimary;
  t.begun_mode = mode_;
  t.bypass = mode_ == TsMode::kGClock && t.work.size() == 1;
  Arm(t, c_.config().timeouts.gtm_us, "timeout_snapshot");
  AcquireSnapshot(t, [this](Txn& t) { SendExec(t); });
}

void ComputeNode::SendPrimaryRead(Txn& t, ShardId shard, const std::vector<std::string>& keys) {
  ExecRequest req;
  req.txn = t.id;
  req.cn = id_;
  req.client = t.req.op.client;
  req.reads = keys;
  req.snapshot = t.snapshot;
  req.read_only = true;
  t.waiting.insert(shard);
  t.chosen[shard] = c_.Primary(shard).id();
  DataNode* dn = &c_.Primary(shard);
  c_.sim().Send(id_, dn->id(), KeysBytes(keys), [dn, req] { dn->OnExec(req); }, "exec");
}

void ComputeNode::SendReplicaRead(Txn& t, ShardId shard, NodeId node,
                                  const std::vector<std::string>& keys) {
  ReplicaReadRequest req;
  req.query = t.id;
  req.cn = id_;
  req.keys = keys;
  req.snapshot = t.snapshot;
  t.waiting.insert(shard);
  t.chosen[shard] = node;
  ReplicaNode* rep = c_.ReplicaByNode(node);
  c_.sim().Send(id_, node, KeysBytes(keys), [rep, req] { rep->OnRead(req); }, "replica_read");
}

void ComputeNode::OnReplicaReply(const ReplicaReadReply& r) {
  Txn* t = Find(r.query);
  if (!t || t->stage != Stage::kExec || !t->waiting.count(r.shard)) return;
  if (t->chosen[r.shard] != r.node) return;
  if (!r.ok) {
    // Same snapshot at the primary.
    t->route = RouteKind::kMixed;
    t->waiting.erase(r.shard);
    SendPrimaryRead(*t, r.shard, t->work[r.shard].reads);
    return;
  }
  t->reads.insert(t->reads.end(), r.reads.begin(), r.reads.end());
  t->waiting.erase(r.shard);
  if (t->waiting.empty()) FinishQuery(*t);
}

void ComputeNode::FinishQuery(Txn& t) {
  if (t.timer) c_.sim().Cancel(t.timer);
  HistoryEvent e = Event(t, EventKind::kReadReturn);
  e.ts = t.snapshot;
  e.reads = t.reads;
  e.route = t.route;
  e.staleness_bound_us = t.req.op.staleness_bound_us;
  e.epoch = t.epoch;
  c_.history().Record(std::move(e));
  Reply(t, OpOutcome::kAnswered, "");
  txns_.erase(t.id);
}

std::vector<ShardCandidates> ComputeNode::Candidates(const std::set<ShardId>& shards) {
  std::vector<ShardCandidates> out;
  auto latency = [this](NodeId node, const Probe* p) {
    if (p && p->measured) return static_cast<uint64_t>(p->latency_us);
    return 2 * c_.sim().BaseDelay(id_, node);
  };
  for (ShardId s : shards) {
    ShardCandidates sc;
    sc.shard = s;
    NodeId primary = c_.Primary(s).id();
    const Probe* pp = probes_.count(primary) ? &probes_[primary] : nullptr;
    sc.primary = {primary, 0, latency(primary, pp), pp ? Healthy(*pp) : Healthy(Probe{})};
    for (auto& r : c_.replicas().at(s)) {
      NodeId n = r->id();
      if (!rcp_->included.count(n)) continue;
      auto it = probes_.find(n);
      if (it == probes_.end() || !Healthy(it->second)) continue;
      sc.replicas.push_back({n, EstimateStaleness(it->second), latency(n, &it->second), true});
    }
    out.push_back(std::move(sc));
  }
  return out;
}

uint64_t ComputeNode::EstimateStaleness(const Probe& p) {
  if (!p.max_commit) return kUnknownStaleness;
  uint64_t max_commit = p.max_commit->value;
  if (mode_ == TsMode::kGtm) {
    SimTime now = c_.sim().now();
    return StalenessFromRate(rate_.last_counter(), max_commit, rate_.Rate(now));
  }
  if (!c_.clocks().healthy(id_)) return kUnknownStaleness;
  return StalenessFromClock(c_.clocks().Read(id_).upper(), max_commit);
}

bool ComputeNode::Healthy(const Probe& p) const {
  SimTime now = c_.sim().now();
  SimTime limit = 3 * c_.config().ror.metrics_interval_us;
  if (!p.measured) return now - started_at_ <= limit;
  return now - p.last_reply_at <= limit;
}

// ---------------------------------------------------------------- metrics and RCP

void ComputeNode::ProbeTick() {
  SimTime now = c_.sim().now();
  NodeId me = id_;
  for (auto& dn : c_.dns()) {
    DataNode* d = dn.get();
    c_.sim().Send(id_, d->id(), kSmallMsg, [d, me, now] { d->OnProbe(me, now); }, "probe");
  }
  for (auto& shard : c_.replicas())
    for (auto& r : shard) {
      ReplicaNode* rep = r.get();
      c_.sim().Send(id_, rep->id(), kSmallMsg, [rep, me, now] { rep->OnProbe(me, now); }, "probe");
    }
  c_.sim().Schedule(c_.config().ror.metrics_interval_us, [this] { ProbeTick(); }, id_, "cn_probe");
}

void ComputeNode::OnProbeReply(NodeId node, SimTime sent_at, std::optional<Timestamp> max_commit) {
  SimTime now = c_.sim().now();
  Probe& p = probes_[node];
  double rtt = static_cast<double>(now - sent_at);
  double alpha = c_.config().ror.latency_alpha;
  p.latency_us = p.measured ? alpha * rtt + (1.0 - alpha) * p.latency_us : rtt;
  p.measured = true;
  p.last_reply_at = now;
  if (max_commit && (!p.max_commit || *p.max_commit < *max_commit)) p.max_commit = max_commit;
}

uint32_t ComputeNode::RankDistance() const {
  uint32_t n = static_cast<uint32_t>(c_.cns().size());
  if (collector_ == kNoNode) return n;
  uint32_t ci = 0;
  for (auto& cn : c_.cns())
    if (cn->id() == collector_) ci = cn->index();
  uint32_t d = (index_ + n - ci) % n;
  return d == 0 ? n : d;
}

void ComputeNode::RcpTick() {
  const auto& ror = c_.config().ror;
  SimTime now = c_.sim().now();
  if (collecting_ && !seeding_) {
    std::map<NodeId, std::optional<Timestamp>> replies;
    for (auto& shard : c_.replicas())
      for (auto& r : shard) {
        auto it = poll_replies_.find(r->id());
        replies[r->id()] = it == poll_replies_.end() ? std::nullopt
                                                     : std::optional<Timestamp>(it->second);
      }
    poll_replies_.clear();
    if (auto point = calc_->Round(replies, now)) Publish(*point);
    NodeId me = id_;
    for (auto& shard : c_.replicas())
      for (auto& r : shard) {
        ReplicaNode* rep = r.get();
        c_.sim().Send(id_, rep->id(), kSmallMsg, [rep, me] { rep->OnPoll(me); }, "rcp_poll");
      }
  } else if (!collecting_ && now - last_publication_at_ > ror.collector_timeout_us * RankDistance()) {
    BecomeCollector();
  }
  c_.sim().Schedule(ror.rcp_interval_us, [this] { RcpTick(); }, id_, "cn_rcp");
}

void ComputeNode::OnPollReply(NodeId replica, const Timestamp& max_commit) {
  if (!collecting_) return;
  poll_replies_[replica] = max_commit;
}

void ComputeNode::BecomeCollector() {
  collecting_ = true;
  ++epoch_;
  collector_ = id_;
  calc_ = std::make_unique<RcpCalculator>(!c_.config().mutations.disable_rcp_clamp,
                                          c_.config().ror.miss_limit);
  for (auto& shard : c_.replicas())
    for (auto& r : shard) calc_->AddReplica(r->id());
  poll_replies_.clear();
  seeding_ = true;
  seed_floor_.reset();
  if (rcp_) seed_floor_ = rcp_->ts;
  floor_waiting_.clear();
  NodeId me = id_;
  for (auto& cn : c_.cns()) {
    if (cn->id() == id_ || !c_.sim().alive(cn->id())) continue;
    floor_waiting_.insert(cn->id());
    ComputeNode* other = cn.get();
    c_.sim().Send(id_, other->id(), kSmallMsg, [other, me] { other->OnFloorQuery(me); },
                  "floor_query");
  }
  if (floor_waiting_.empty()) {
    FinishSeeding();
    return;
  }
  seed_timer_ = c_.sim().Schedule(c_.config().ror.collector_timeout_us,
                                  [this] { FinishSeeding(); }, id_, "rcp_seed");
}

void ComputeNode::OnFloorQuery(NodeId from) {
  std::optional<Timestamp> floor;
  if (rcp_) floor = rcp_->ts;
  NodeId me = id_;
  ComputeNode* other = c_.CnByNode(from);
  c_.sim().Send(id_, from, kSmallMsg, [other, me, floor] { other->OnFloorReply(me, floor); },
                "floor_reply");
}

void ComputeNode::OnFloorReply(NodeId from, std::optional<Timestamp> floor) {
  if (!seeding_) return;
  if (floor && (!seed_floor_ || *seed_floor_ < *floor)) seed_floor_ = floor;
  floor_waiting_.erase(from);
  if (floor_waiting_.empty()) FinishSeeding();
}

void ComputeNode::FinishSeeding() {
  if (!seeding_) return;
  seeding_ = false;
  if (seed_timer_) c_.sim().Cancel(seed_timer_);
  seed_timer_ = 0;
  if (seed_floor_) calc_->Seed(*seed_floor_, epoch_);
}

void ComputeNode::Publish(const ReplicaConsistencyPoint& p) {
  ReplicaConsistencyPoint point = p;
  point.epoch = epoch_;
  HistoryEvent e;
  e.kind = EventKind::kRcpPublish;
  e.at = c_.sim().now();
  e.node = id_;
  e.ts = point.ts;
  e.epoch = point.epoch;
  e.detail = std::to_string(point.included.size()) + " replicas";
  c_.history().Record(std::move(e));
  rcp_ = point;
  last_publication_at_ = point.computed_at;
  NodeId me = id_;
  for (auto& cn : c_.cns()) {
    if (cn->id() == id_) continue;
    ComputeNode* other = cn.get();
    c_.sim().Send(id_, other->id(), kSmallMsg + 8 * point.included.size(),
                  [other, point, me] { other->OnPublish(point, me); }, "rcp_publish");
  }
}

void ComputeNode::OnPublish(const ReplicaConsistencyPoint& point, NodeId from) {
  if (point.epoch < epoch_) return;
  if (collecting_) {
    bool yield = point.epoch > epoch_ || c_.CnByNode(from)->index() < index_;
    if (!yield) return;
    collecting_ = false;
    seeding_ = false;
    calc_.reset();
  }
  rcp_ = point;
  epoch_ = point.epoch;
  collector_ = from;
  last_publication_at_ = c_.sim().now();
}

void ComputeNode::HeartbeatTick() {
  const auto& ror = c_.config().ror;
  if (collecting_ && !seeding_ && ror.heartbeats && ready_) {
    TxnId id = kHeartbeatBase + (TxnId{index_} << 40) + ++heartbeat_seq_;
    Txn& t = txns_[id];
    t.id = id;
    t.heartbeat = true;
    t.begun_mode = mode_;
    t.phase_start = c_.sim().now();
    AcquireCommitTs(t);
  }
  c_.sim().Schedule(ror.heartbeat_interval_us, [this] { HeartbeatTick(); }, id_, "cn_heartbeat");
}

}  // namespace geosim
