#include "geosim/ror/ddl_gate.h"

namespace geosim {

DdlDecision DdlGate(const std::set<std::string>& query_tables, const Timestamp& rcp,
                    const std::map<std::string, Timestamp>& table_ddl_ts,
                    const Timestamp& global_max_ddl_ts) {
  if (global_max_ddl_ts < rcp) return DdlDecision::kAllowGlobal;
  for (const auto& table : query_tables) {
    auto it = table_ddl_ts.find(table);
    if (it != table_ddl_ts.end() && !(it->second < rcp)) return DdlDecision::kDeny;
  }
  return DdlDecision::kAllowTables;
}

}  // namespace geosim
