#pragma once

#include <map>
#include <string>
#include <vector>

#include "geosim/verify/history.h"

namespace geosim {

struct Violation {
  std::string checker;
  std::string description;
  uint64_t txn = 0;
  uint64_t other_txn = 0;
  SimTime at = 0;
};

// R.1 and R.2 over reads served at fresh snapshots (primary routes and
// read-write transactions). R.1: a read of a key invoked after a writer of
// that key became visible returns that write or a later one. R.2: a read
// never returns a write whose commit was requested only after the reader's
// snapshot was established.
std::vector<Violation> CheckExternalSerializability(const History& history);

// Every read (any route) against the state obtained by replaying the
// primaries' logs up to the read's snapshot.
std::vector<Violation> CheckReplicaConsistency(const History& history);

// Per client, a replica-served query invoked after another replica-served
// query returned reads at a snapshot no older than that query's.
std::vector<Violation> CheckMonotonicFreshness(const History& history);

// Replica reads with a staleness bound: the serving replica's true lag
// (time since the first record it had not replayed was appended) stays
// within bound + allowance.
std::vector<Violation> CheckBoundedStaleness(const History& history, SimTime allowance_us);

struct CheckToggles {
  bool external_serializability = true;
  bool replica_consistency = true;
  bool monotonic_freshness = true;
  bool bounded_staleness = true;
};

struct CheckReport {
  std::map<std::string, std::vector<Violation>> by_checker;
  size_t total() const;
};

CheckReport RunCheckers(const History& history, const CheckToggles& toggles);

}  // namespace geosim
