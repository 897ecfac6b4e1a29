#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geosim/repl/redo.h"
#include "geosim/sim/latency.h"
#include "geosim/store/distribution.h"

namespace geosim {

enum class ArrivalModel : uint8_t { kClosed, kOpen };

struct WorkloadSpec {
  SimTime duration_us = 10'000'000;
  uint32_t clients = 12;
  double read_fraction = 0.5;
  double multi_shard_fraction = 0.5;
  // Probability that a key lives on a shard whose primary is outside the
  // client's region.
  double remote_fraction = 0.0;
  double ddl_fraction = 0.0;
  uint32_t tables = 4;
  uint64_t keys_per_table = 1000;
  uint32_t value_size = 16;
  uint32_t keys_per_txn = 2;
  uint32_t keys_per_query = 4;
  std::optional<uint64_t> staleness_bound_us;
  bool replica_reads = true;
  // Queries go to primaries until the RCP covers the session's last commit.
  bool read_your_writes = false;
  ArrivalModel arrival = ArrivalModel::kClosed;
  double think_time_mean_us = 1000.0;
  // Open model: per-client arrival rate.
  double open_rate_per_s = 10.0;
  // Stop issuing after this many operations in total (0 = unlimited).
  uint64_t max_ops = 0;

  // Throws std::invalid_argument.
  void Validate() const;
};

enum class OpKind : uint8_t { kReadWrite, kReadOnly, kDdl };

const char* OpKindName(OpKind kind);

struct Operation {
  uint64_t id = 0;
  uint32_t client = 0;
  OpKind kind = OpKind::kReadWrite;
  std::vector<std::string> reads;
  std::vector<std::string> writes;
  std::string table;  // DDL target
  std::optional<uint64_t> staleness_bound_us;
  bool replica_reads = true;
  // Closed model: think time before issuing; open model: inter-arrival gap.
  uint64_t delay_us = 0;
};

// Where shards and clients live, for the remote-key choice.
struct Placement {
  std::vector<RegionId> shard_region;   // primary region per shard
  std::vector<RegionId> client_region;  // per client
};

// Deterministic per-client operation streams. Operation i of the global
// stream belongs to client i % clients; each client's stream depends only
// on (spec, seed, client).
class WorkloadGenerator {
 public:
  WorkloadGenerator(WorkloadSpec spec, const Distribution& dist, Placement placement,
                    uint64_t seed);

  Operation Next(uint32_t client);
  const WorkloadSpec& spec() const { return spec_; }

 private:
  std::string PickKey(std::mt19937_64& rng, uint32_t client, bool remote,
                      std::optional<ShardId> avoid);
  std::vector<std::string> PickKeys(std::mt19937_64& rng, uint32_t client, uint32_t count);

  WorkloadSpec spec_;
  const Distribution& dist_;
  Placement placement_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<uint64_t> issued_;
  // keys grouped by shard
  std::vector<std::vector<std::string>> keys_by_shard_;
};

// The first n operations of the global stream.
std::vector<Operation> Generate(const WorkloadSpec& spec, const Distribution& dist,
                                const Placement& placement, uint64_t seed, uint64_t n);

}  // namespace geosim
