#include "geosim/verify/checkers.h"

#include <algorithm>
#include <unordered_map>

namespace geosim {

namespace {

struct OracleVersion {
  Timestamp ts;
  TxnId txn;
  std::string value;
};

using VersionIndex = std::unordered_map<std::string, std::vector<OracleVersion>>;

// Committed versions per key from replaying every primary log in full.
VersionIndex ReplayLogs(const History& h) {
  VersionIndex index;
  for (const auto& log : h.logs()) {
    std::unordered_map<TxnId, std::map<std::string, std::string>> pending;
    for (const auto& r : log.records) {
      switch (r.kind) {
        case RedoKind::kWrite:
          for (const auto& k : r.keys) pending[r.txn][k] = r.payload;
          break;
        case RedoKind::kCommit:
        case RedoKind::kCommitPrepared:
        case RedoKind::kDdl: {
          auto it = pending.find(r.txn);
          if (it == pending.end()) break;
          for (auto& [k, v] : it->second) index[k].push_back({r.commit_ts, r.txn, v});
          pending.erase(it);
          break;
        }
        case RedoKind::kAbort:
        case RedoKind::kAbortPrepared:
          pending.erase(r.txn);
          break;
        default:
          break;
      }
    }
  }
  for (auto& [k, chain] : index)
    std::sort(chain.begin(), chain.end(),
              [](const OracleVersion& a, const OracleVersion& b) { return a.ts < b.ts; });
  return index;
}

const OracleVersion* VisibleAt(const VersionIndex& index, const std::string& key,
                               const Timestamp& snapshot) {
  auto it = index.find(key);
  if (it == index.end()) return nullptr;
  const auto& chain = it->second;
  auto pos = std::upper_bound(chain.begin(), chain.end(), snapshot,
                              [](const Timestamp& t, const OracleVersion& v) { return t < v.ts; });
  if (pos == chain.begin()) return nullptr;
  return &*std::prev(pos);
}

bool FreshRoute(const HistoryEvent& e) {
  return e.route == RouteKind::kPrimary || e.route == RouteKind::kNone;
}

std::string Ts(const Timestamp& t) { return t.ToString(); }

}  // namespace

std::vector<Violation> CheckExternalSerializability(const History& h) {
  std::vector<Violation> out;
  std::unordered_map<uint64_t, SimTime> invoked_at, snapshot_at, requested_at;
  // key -> (visible_at, commit_ts, txn), later turned into prefix maxima
  struct Visible {
    SimTime at;
    Timestamp ts;
    uint64_t txn;
  };
  std::unordered_map<std::string, std::vector<Visible>> visible;
  for (const auto& e : h.events()) {
    switch (e.kind) {
      case EventKind::kInvoke: invoked_at.emplace(e.txn, e.at); break;
      case EventKind::kSnapshot: snapshot_at[e.txn] = e.at; break;
      case EventKind::kCommitRequest: requested_at.emplace(e.txn, e.at); break;
      case EventKind::kCommitVisible:
        for (const auto& k : e.keys) visible[k].push_back({e.at, e.ts, e.txn});
        break;
      default: break;
    }
  }
  for (auto& [k, list] : visible) {
    std::sort(list.begin(), list.end(), [](const Visible& a, const Visible& b) {
      return a.at != b.at ? a.at < b.at : a.ts < b.ts;
    });
    for (size_t i = 1; i < list.size(); ++i)
      if (list[i].ts < list[i - 1].ts) {
        list[i].ts = list[i - 1].ts;
        list[i].txn = list[i - 1].txn;
      }
  }
  // (key, commit ts) -> writer, from the logs.
  std::map<std::pair<std::string, Timestamp>, TxnId> writer;
  VersionIndex index = ReplayLogs(h);
  for (const auto& [k, chain] : index)
    for (const auto& v : chain) writer[{k, v.ts}] = v.txn;

  for (const auto& e : h.events()) {
    if (e.kind != EventKind::kReadReturn || !FreshRoute(e)) continue;
    auto inv = invoked_at.find(e.txn);
    if (inv == invoked_at.end()) continue;
    SimTime t2 = inv->second;
    auto snap = snapshot_at.find(e.txn);
    for (const auto& r : e.reads) {
      if (r.own_write || r.replica) continue;
      // R.1
      auto vit = visible.find(r.key);
      if (vit != visible.end()) {
        const auto& list = vit->second;
        auto pos = std::lower_bound(list.begin(), list.end(), t2,
                                    [](const Visible& v, SimTime t) { return v.at < t; });
        if (pos != list.begin()) {
          const Visible& last = *std::prev(pos);
          bool has_version = r.value.has_value();
          if (!has_version || r.version < last.ts) {
            Violation v;
            v.checker = "R1";
            v.txn = e.txn;
            v.other_txn = last.txn;
            v.at = t2;
            v.description = "txn " + std::to_string(e.txn) + " invoked at " + std::to_string(t2) +
                            " read " + r.key + " at version " +
                            (has_version ? Ts(r.version) : std::string("<none>")) +
                            " after txn " + std::to_string(last.txn) + " (ts " + Ts(last.ts) +
                            ") became visible at " + std::to_string(last.at);
            out.push_back(std::move(v));
          }
        }
      }
      // R.2
      if (r.value && snap != snapshot_at.end()) {
        auto w = writer.find({r.key, r.version});
        if (w == writer.end()) continue;
        auto req = requested_at.find(w->second);
        if (req != requested_at.end() && req->second > snap->second) {
          Violation v;
          v.checker = "R2";
          v.txn = e.txn;
          v.other_txn = w->second;
          v.at = snap->second;
          v.description = "txn " + std::to_string(e.txn) + " (snapshot at " +
                          std::to_string(snap->second) + ") saw " + r.key + " from txn " +
                          std::to_string(w->second) + " whose commit was requested at " +
                          std::to_string(req->second);
          out.push_back(std::move(v));
        }
      }
    }
  }
  return out;
}

std::vector<Violation> CheckReplicaConsistency(const History& h) {
  std::vector<Violation> out;
  VersionIndex index = ReplayLogs(h);
  for (const auto& e : h.events()) {
    if (e.kind != EventKind::kReadReturn) continue;
    for (const auto& r : e.reads) {
      if (r.own_write) continue;
      const OracleVersion* expect = VisibleAt(index, r.key, e.ts);
      bool ok = expect ? (r.value && *r.value == expect->value && r.version == expect->ts)
                       : !r.value.has_value();
      if (ok) continue;
      Violation v;
      v.checker = "replica_consistency";
      v.txn = e.txn;
      v.at = e.at;
      v.description = std::string(r.replica ? "replica" : "primary") + " read of " + r.key +
                      " at snapshot " + Ts(e.ts) + " returned " +
                      (r.value ? "version " + Ts(r.version) : std::string("nothing")) +
                      ", log replay gives " +
                      (expect ? "version " + Ts(expect->ts) : std::string("nothing"));
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> CheckMonotonicFreshness(const History& h) {
  std::vector<Violation> out;
  // Per client: the freshest replica snapshot returned so far, and for each
  // query the freshest one returned before it was invoked.
  std::unordered_map<uint32_t, std::pair<Timestamp, uint64_t>> best;
  std::unordered_map<uint64_t, std::pair<Timestamp, uint64_t>> floor;
  for (const auto& e : h.events()) {
    if (e.kind == EventKind::kInvoke) {
      if (!e.read_only) continue;
      auto it = best.find(e.client);
      if (it != best.end()) floor[e.txn] = it->second;
      continue;
    }
    if (e.kind != EventKind::kReadReturn || !e.read_only) continue;
    if (e.route != RouteKind::kReplica && e.route != RouteKind::kMixed) continue;
    auto f = floor.find(e.txn);
    if (f != floor.end() && e.ts < f->second.first) {
      Violation v;
      v.checker = "monotonic_freshness";
      v.txn = e.txn;
      v.other_txn = f->second.second;
      v.at = e.at;
      v.description = "client " + std::to_string(e.client) + " query " + std::to_string(e.txn) +
                      " read at " + Ts(e.ts) + " after query " +
                      std::to_string(f->second.second) + " had returned " + Ts(f->second.first);
      out.push_back(std::move(v));
    }
    auto it = best.find(e.client);
    if (it == best.end() || it->second.first < e.ts) best[e.client] = {e.ts, e.txn};
  }
  return out;
}

std::vector<Violation> CheckBoundedStaleness(const History& h, SimTime allowance_us) {
  std::vector<Violation> out;
  std::unordered_map<ShardId, const ShardLog*> logs;
  for (const auto& l : h.logs()) logs[l.shard] = &l;
  for (const auto& e : h.events()) {
    if (e.kind != EventKind::kReadReturn || !e.staleness_bound_us) continue;
    for (const auto& r : e.reads) {
      if (!r.replica) continue;
      auto it = logs.find(r.shard);
      if (it == logs.end()) continue;
      const auto& recs = it->second->records;
      SimTime staleness = 0;
      if (r.applied_lsn < recs.size()) {
        SimTime appended = recs[r.applied_lsn].appended_at;
        if (appended < r.served_at) staleness = r.served_at - appended;
      }
      if (staleness <= *e.staleness_bound_us + allowance_us) continue;
      Violation v;
      v.checker = "bounded_staleness";
      v.txn = e.txn;
      v.at = r.served_at;
      v.description = "replica node " + std::to_string(r.node) + " served " + r.key +
                      " with true staleness " + std::to_string(staleness) + " us (bound " +
                      std::to_string(*e.staleness_bound_us) + " us)";
      out.push_back(std::move(v));
    }
  }
  return out;
}

size_t CheckReport::total() const {
  size_t n = 0;
  for (const auto& [name, list] : by_checker) n += list.size();
  return n;
}

CheckReport RunCheckers(const History& h, const CheckToggles& t) {
  CheckReport rep;
  if (t.external_serializability) rep.by_checker["external_serializability"] =
      CheckExternalSerializability(h);
  if (t.replica_consistency) rep.by_checker["replica_consistency"] = CheckReplicaConsistency(h);
  if (t.monotonic_freshness) rep.by_checker["monotonic_freshness"] = CheckMonotonicFreshness(h);
  if (t.bounded_staleness)
    rep.by_checker["bounded_staleness"] =
        CheckBoundedStaleness(h, h.meta().metrics_interval_us);
  return rep;
}

}  // namespace geosim
