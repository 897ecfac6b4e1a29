#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geosim/coord/messages.h"
#include "geosim/ror/node_select.h"
#include "geosim/ror/rcp.h"
#include "geosim/ror/staleness.h"
#include "geosim/txn/gtm_server.h"

namespace geosim {

class Cluster;

// Coordinator: runs client transactions and queries, takes part in mode
// transitions, keeps routing metrics, and collects the RCP when it holds
// the collector role.
class ComputeNode {
 public:
  ComputeNode(Cluster& cluster, NodeId id, uint32_t index, TsMode mode);
  ~ComputeNode();

  NodeId id() const { return id_; }
  uint32_t index() const { return index_; }
  TsMode mode() const { return mode_; }
  bool ready() const { return ready_; }
  const std::optional<ReplicaConsistencyPoint>& rcp() const { return rcp_; }
  bool collecting() const { return collecting_; }
  uint64_t epoch() const { return epoch_; }

  void Start();
  void OnCrash();
  void OnRecover();

  void OnClientRequest(const ClientRequest& req);
  void OnExecReply(const ExecReply& reply);
  void OnPrepareReply(TxnId txn, ShardId shard, bool ok);
  void OnFinalizeAck(TxnId txn, ShardId shard);
  void OnReplicaReply(const ReplicaReadReply& reply);
  void OnInquiry(TxnId txn, NodeId dn);

  void OnSwitchMode(TsMode mode);
  void OnAdoptReply(TsMode mode);

  void OnProbeReply(NodeId node, SimTime sent_at, std::optional<Timestamp> max_commit);
  void OnPollReply(NodeId replica, const Timestamp& max_commit);
  void OnPublish(const ReplicaConsistencyPoint& point, NodeId from);
  void OnFloorQuery(NodeId from);
  void OnFloorReply(NodeId from, std::optional<Timestamp> floor);

 private:
  enum class Stage : uint8_t { kSnapshot, kExec, kPrepare, kTimestamp, kFinalize };

  struct Txn {
    TxnId id = 0;
    ClientRequest req;
    Stage stage = Stage::kSnapshot;
    TsMode begun_mode = TsMode::kGtm;
    bool bypass = false;
    Timestamp snapshot;
    std::map<ShardId, ExecRequest> work;
    std::set<ShardId> write_shards;
    std::set<ShardId> waiting;
    std::vector<ReadObservation> reads;
    Timestamp commit_ts;
    std::map<std::string, uint64_t> phases;
    SimTime phase_start = 0;
    EventId timer = 0;
    bool decided = false;
    bool heartbeat = false;
    // Queries
    bool query = false;
    RouteKind route = RouteKind::kNone;
    std::map<ShardId, NodeId> chosen;
    uint64_t epoch = 0;
  };

  struct Probe {
    double latency_us = 0.0;
    bool measured = false;
    SimTime last_reply_at = 0;
    std::optional<Timestamp> max_commit;
  };

  using TsCallback = std::function<void(Txn&, const Timestamp&, uint64_t wait_us)>;

  void StartTimers();
  Txn* Find(TxnId id);
  HistoryEvent Event(const Txn& t, EventKind kind) const;
  void Arm(Txn& t, SimTime timeout, const std::string& reason);
  void EndPhase(Txn& t, const char* name);
  uint64_t NextSeq() { return ++local_seq_; }
  std::optional<ClockReading> ReadClock(Txn* t);
  void RequestGtm(Txn& t, TsPurpose purpose, std::optional<ClockReading> reading, TsCallback then);

  void BeginTxn(Txn& t);
  void AcquireSnapshot(Txn& t, std::function<void(Txn&)> then);
  void EstablishSnapshot(Txn& t, const Timestamp& ts, std::function<void(Txn&)> then);
  void SendExec(Txn& t);
  void StartPrepare(Txn& t);
  void AcquireCommitTs(Txn& t);
  void AfterCommitWait(TxnId id);
  void SendFinalize(Txn& t, bool commit);
  void FinalizeRetry(TxnId id);
  void CompleteCommit(Txn& t);
  void Abort(Txn& t, const std::string& reason);
  void Reply(const Txn& t, OpOutcome outcome, const std::string& reason);

  void StartQuery(Txn& t);
  void RouteOnPrimaries(Txn& t);
  void SendReplicaRead(Txn& t, ShardId shard, NodeId node, const std::vector<std::string>& keys);
  void SendPrimaryRead(Txn& t, ShardId shard, const std::vector<std::string>& keys);
  void FinishQuery(Txn& t);
  std::vector<ShardCandidates> Candidates(const std::set<ShardId>& shards);
  uint64_t EstimateStaleness(const Probe& p);
  bool Healthy(const Probe& p) const;

  void ProbeTick();
  void RcpTick();
  void HeartbeatTick();
  void BecomeCollector();
  void FinishSeeding();
  void Publish(const ReplicaConsistencyPoint& point);
  uint32_t RankDistance() const;

  Cluster& c_;
  NodeId id_;
  uint32_t index_;
  TsMode mode_;
  bool ready_ = true;
  uint64_t local_seq_ = 0;
  uint64_t max_gclock_issued_ = 0;
  std::map<TxnId, Txn> txns_;

  std::map<NodeId, Probe> probes_;
  IssueRateTracker rate_;

  std::optional<ReplicaConsistencyPoint> rcp_;
  uint64_t epoch_ = 0;
  NodeId collector_ = kNoNode;
  SimTime last_publication_at_ = 0;

  SimTime started_at_ = 0;
  bool collecting_ = false;
  bool seeding_ = false;
  std::unique_ptr<RcpCalculator> calc_;
  std::map<NodeId, Timestamp> poll_replies_;
  std::optional<Timestamp> seed_floor_;
  std::set<NodeId> floor_waiting_;
  EventId seed_timer_ = 0;
  uint64_t heartbeat_seq_ = 0;
};

}  // namespace geosim
