#include "geosim/ror/rcp_example.h"

#include "geosim/repl/replica_state.h"
#include "geosim/ror/rcp.h"
#include "geosim/store/shard_store.h"

namespace geosim {

namespace {

struct ExampleTxn {
  int id;
  std::vector<std::pair<ShardId, std::string>> writes;
};

std::string ValueOf(int id) { return "trx" + std::to_string(id); }

}  // namespace

RcpExampleReport RunRcpExample() {
  RcpExampleReport report;
  report.ts.resize(6);
  for (int i = 1; i <= 5; ++i) {
    Timestamp t;
    t.value = 10 * static_cast<uint64_t>(i);
    t.coordinator = 0;
    t.local_seq = static_cast<uint64_t>(i);
    report.ts[i] = t;
  }

  std::vector<ShardStore> primaries;
  for (ShardId s = 0; s < 3; ++s) primaries.emplace_back(s);

  const std::vector<ExampleTxn> txns = {
      {1, {{0, "a1"}}},
      {2, {{0, "a2"}, {1, "b2"}}},
      {3, {{1, "b3"}, {2, "c3"}}},
      {4, {{0, "a4"}, {1, "b4"}, {2, "c4"}}},
      {5, {{1, "b5"}}},
  };

  auto stage_and_prepare = [&](const ExampleTxn& t) {
    std::set<ShardId> shards;
    for (const auto& [s, k] : t.writes) {
      primaries[s].StageWrite(static_cast<TxnId>(t.id), k, ValueOf(t.id));
      shards.insert(s);
    }
    for (ShardId s : shards)
      primaries[s].Prepare(static_cast<TxnId>(t.id), kMinTimestamp, shards.size() > 1);
    return shards;
  };
  auto finalize = [&](const ExampleTxn& t, ShardId s) {
    primaries[s].Finalize(static_cast<TxnId>(t.id), report.ts[t.id]);
  };

  // Trx1 and Trx2 both reach PendingCommit before either commit record is
  // written; Trx2's commit lands first on shard 0.
  stage_and_prepare(txns[0]);
  auto s2 = stage_and_prepare(txns[1]);
  for (ShardId s : s2) finalize(txns[1], s);
  finalize(txns[0], 0);
  auto s3 = stage_and_prepare(txns[2]);
  for (ShardId s : s3) finalize(txns[2], s);
  size_t replica3_prefix = primaries[2].log().size();
  auto s4 = stage_and_prepare(txns[3]);
  for (ShardId s : s4) finalize(txns[3], s);
  auto s5 = stage_and_prepare(txns[4]);
  for (ShardId s : s5) finalize(txns[4], s);

  // Replica 1 and 2 have everything shipped so far; Replica 3 has not yet
  // received any of Trx4's records.
  std::vector<ReplicaState> replicas = {ReplicaState(0), ReplicaState(1), ReplicaState(2)};
  const size_t prefix[3] = {primaries[0].log().size(), primaries[1].log().size(), replica3_prefix};
  RcpCalculator calc;
  std::map<NodeId, std::optional<Timestamp>> replies;
  for (ShardId s = 0; s < 3; ++s) {
    std::string name = "Replica " + std::to_string(s + 1);
    for (size_t i = 0; i < prefix[s]; ++i) {
      const RedoRecord& r = primaries[s].log()[i];
      replicas[s].Apply(r);
      report.replica_logs[name].push_back(DescribeRecord(r));
    }
    report.replica_max[name] = replicas[s].max_commit_ts();
    calc.AddReplica(s);
    replies[s] = replicas[s].max_commit_ts();
  }
  report.rcp = calc.Round(replies, 0)->ts;

  for (const auto& t : txns) {
    bool all = true;
    for (const auto& [s, k] : t.writes) {
      ReplicaReadResult res = replicas[s].ReadAt(k, report.rcp);
      if (res.status != ReplicaReadStatus::kOk || res.value != ValueOf(t.id)) all = false;
    }
    if (all) report.visible.insert(t.id);
  }
  return report;
}

}  // namespace geosim
