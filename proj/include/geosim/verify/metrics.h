#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "geosim/verify/history.h"

namespace geosim {

struct MetricsReport {
  double duration_s = 0.0;
  uint64_t committed = 0;
  uint64_t aborted = 0;
  uint64_t queries = 0;          // read-only queries answered
  uint64_t replica_queries = 0;  // answered at least partly by replicas
  double throughput_per_s = 0.0;  // commits + answered queries
  double txn_throughput_per_s = 0.0;
  double query_throughput_per_s = 0.0;
  double p50_latency_us = 0.0;
  double p99_latency_us = 0.0;
  double abort_rate = 0.0;
  double replica_read_share = 0.0;
  uint64_t rcp_publications = 0;
  uint64_t mode_changes = 0;
  std::map<std::string, uint64_t> abort_reasons;
  // Mean microseconds per commit phase.
  std::map<std::string, double> phase_mean_us;
};

// Aggregates over [meta.start_us, meta.end_us]; an empty history yields an
// all-zero report.
MetricsReport ComputeMetrics(const History& history);

// Nearest-rank percentile of an unsorted sample (p in [0, 100]).
double Percentile(std::vector<double> sample, double p);

}  // namespace geosim
