#pragma once

#include <map>
#include <set>
#include <string>

#include "geosim/txn/timestamp.h"

namespace geosim {

enum class DdlDecision : uint8_t { kAllowGlobal, kAllowTables, kDeny };

// Replica reads are allowed when the RCP is above the largest DDL timestamp,
// or else above the DDL timestamp of every table the query touches.
DdlDecision DdlGate(const std::set<std::string>& query_tables, const Timestamp& rcp,
                    const std::map<std::string, Timestamp>& table_ddl_ts,
                    const Timestamp& global_max_ddl_ts);

inline bool Allowed(DdlDecision d) { return d != DdlDecision::kDeny; }

}  // namespace geosim
