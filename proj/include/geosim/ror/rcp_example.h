#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "geosim/txn/timestamp.h"

namespace geosim {

struct RcpExampleReport {
  // Commit timestamps of Trx1..Trx5, index 0 unused.
  std::vector<Timestamp> ts;
  // Largest commit timestamp each replica has replayed.
  std::map<std::string, Timestamp> replica_max;
  Timestamp rcp;
  // Which of Trx1..Trx5 a replica read at the RCP shows in full.
  std::set<int> visible;
  // Records each replica received, in log order.
  std::map<std::string, std::vector<std::string>> replica_logs;
};

// Three shards with one replica each and five transactions whose redo
// streams arrived only partially: Replica 1 holds up to ts4 (with Trx2's
// commit ahead of Trx1's), Replica 2 up to ts5, Replica 3 up to ts3.
RcpExampleReport RunRcpExample();

}  // namespace geosim
