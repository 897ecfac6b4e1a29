#include "geosim/verify/workload.h"

#include <algorithm>
#include <stdexcept>

namespace geosim {

namespace {

void CheckFraction(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string(name) + " must be within [0, 1]");
}

}  // namespace

void WorkloadSpec::Validate() const {
  CheckFraction("read_fraction", read_fraction);
  CheckFraction("multi_shard_fraction", multi_shard_fraction);
  CheckFraction("remote_fraction", remote_fraction);
  CheckFraction("ddl_fraction", ddl_fraction);
  if (read_fraction + ddl_fraction > 1.0)
    throw std::invalid_argument("read_fraction + ddl_fraction exceeds 1");
  if (clients == 0) throw std::invalid_argument("clients must be positive");
  if (tables == 0 || keys_per_table == 0) throw std::invalid_argument("empty key space");
  if (keys_per_txn == 0 || keys_per_query == 0)
    throw std::invalid_argument("operations need at least one key");
  if (think_time_mean_us < 0.0) throw std::invalid_argument("think time must be >= 0");
  if (arrival == ArrivalModel::kOpen && open_rate_per_s <= 0.0)
    throw std::invalid_argument("open arrival needs a positive rate");
}

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kReadWrite: return "read_write";
    case OpKind::kReadOnly: return "read_only";
    case OpKind::kDdl: return "ddl";
  }
  return "?";
}

WorkloadGenerator::WorkloadGenerator(WorkloadSpec spec, const Distribution& dist,
                                     Placement placement, uint64_t seed)
    : spec_(std::move(spec)), dist_(dist), placement_(std::move(placement)) {
  spec_.Validate();
  keys_by_shard_.resize(dist_.shard_count());
  for (uint32_t t = 0; t < spec_.tables; ++t)
    for (uint64_t i = 0; i < spec_.keys_per_table; ++i) {
      std::string k = Distribution::Key(t, i);
      keys_by_shard_[dist_.ShardOf(k)].push_back(std::move(k));
    }
  for (uint32_t c = 0; c < spec_.clients; ++c) {
    // Draw site: one generator per client, seeded from (seed, client).
    rngs_.emplace_back(seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)));
  }
  issued_.assign(spec_.clients, 0);
  if (placement_.client_region.size() < spec_.clients)
    placement_.client_region.resize(spec_.clients, 0);
  if (placement_.shard_region.size() < dist_.shard_count())
    placement_.shard_region.resize(dist_.shard_count(), 0);
}

std::string WorkloadGenerator::PickKey(std::mt19937_64& rng, uint32_t client, bool remote,
                                       std::optional<ShardId> avoid) {
  RegionId home = placement_.client_region[client];
  std::vector<ShardId> choices;
  for (ShardId s = 0; s < dist_.shard_count(); ++s) {
    if (keys_by_shard_[s].empty() || (avoid && *avoid == s)) continue;
    if ((placement_.shard_region[s] != home) == remote) choices.push_back(s);
  }
  if (choices.empty()) {
    for (ShardId s = 0; s < dist_.shard_count(); ++s)
      if (!keys_by_shard_[s].empty() && !(avoid && *avoid == s)) choices.push_back(s);
  }
  if (choices.empty()) choices.push_back(*avoid);
  ShardId s = choices[std::uniform_int_distribution<size_t>(0, choices.size() - 1)(rng)];
  const auto& keys = keys_by_shard_[s];
  return keys[std::uniform_int_distribution<size_t>(0, keys.size() - 1)(rng)];
}

std::vector<std::string> WorkloadGenerator::PickKeys(std::mt19937_64& rng, uint32_t client,
                                                     uint32_t count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> keys;
  bool multi = u(rng) < spec_.multi_shard_fraction && dist_.shard_count() > 1;
  if (!multi) {
    std::string first = PickKey(rng, client, u(rng) < spec_.remote_fraction, std::nullopt);
    ShardId s = dist_.ShardOf(first);
    keys.push_back(first);
    const auto& pool = keys_by_shard_[s];
    for (uint32_t i = 1; i < count; ++i)
      keys.push_back(pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)]);
  } else {
    keys.push_back(PickKey(rng, client, u(rng) < spec_.remote_fraction, std::nullopt));
    ShardId first = dist_.ShardOf(keys[0]);
    keys.push_back(PickKey(rng, client, u(rng) < spec_.remote_fraction, first));
    for (uint32_t i = 2; i < count; ++i)
      keys.push_back(PickKey(rng, client, u(rng) < spec_.remote_fraction, std::nullopt));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

Operation WorkloadGenerator::Next(uint32_t client) {
  auto& rng = rngs_.at(client);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Operation op;
  op.client = client;
  op.id = issued_[client]++ * spec_.clients + client;
  double r = u(rng);
  if (r < spec_.ddl_fraction) {
    op.kind = OpKind::kDdl;
    op.table = Distribution::TableName(
        static_cast<uint32_t>(std::uniform_int_distribution<uint32_t>(0, spec_.tables - 1)(rng)));
  } else if (r < spec_.ddl_fraction + spec_.read_fraction) {
    op.kind = OpKind::kReadOnly;
    op.reads = PickKeys(rng, client, spec_.keys_per_query);
    op.staleness_bound_us = spec_.staleness_bound_us;
    op.replica_reads = spec_.replica_reads;
  } else {
    op.kind = OpKind::kReadWrite;
    op.reads = PickKeys(rng, client, spec_.keys_per_txn);
    op.writes = op.reads;
  }
  double mean = spec_.arrival == ArrivalModel::kOpen ? 1e6 / spec_.open_rate_per_s
                                                     : spec_.think_time_mean_us;
  op.delay_us =
      mean > 0.0 ? static_cast<uint64_t>(std::exponential_distribution<double>(1.0 / mean)(rng))
                 : 0;
  return op;
}

std::vector<Operation> Generate(const WorkloadSpec& spec, const Distribution& dist,
                                const Placement& placement, uint64_t seed, uint64_t n) {
  WorkloadGenerator gen(spec, dist, placement, seed);
  std::vector<Operation> out;
  out.reserve(n);
  for (uint64_t i = 0; i < n; ++i) out.push_back(gen.Next(static_cast<uint32_t>(i % spec.clients)));
  return out;
}

}  // namespace geosim
