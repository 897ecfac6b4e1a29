#include "geosim/verify/metrics.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace geosim {

double Percentile(std::vector<double> sample, double p) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  double rank = std::ceil(p / 100.0 * static_cast<double>(sample.size()));
  size_t idx = rank < 1.0 ? 0 : static_cast<size_t>(rank) - 1;
  return sample[std::min(idx, sample.size() - 1)];
}

MetricsReport ComputeMetrics(const History& h) {
  MetricsReport m;
  SimTime span = h.meta().end_us > h.meta().start_us ? h.meta().end_us - h.meta().start_us : 0;
  m.duration_s = static_cast<double>(span) / 1e6;

  std::unordered_map<uint64_t, SimTime> invoked;
  std::vector<double> latencies;
  std::map<std::string, std::pair<double, uint64_t>> phases;
  const SimTime end = h.meta().end_us;
  for (const auto& e : h.events()) {
    if (end > 0 && e.at > end && e.kind != EventKind::kInvoke) continue;
    switch (e.kind) {
      case EventKind::kInvoke:
        invoked.emplace(e.txn, e.at);
        break;
      case EventKind::kCommitVisible: {
        ++m.committed;
        auto it = invoked.find(e.txn);
        if (it != invoked.end()) latencies.push_back(static_cast<double>(e.at - it->second));
        for (const auto& [name, us] : e.phases) {
          phases[name].first += static_cast<double>(us);
          ++phases[name].second;
        }
        break;
      }
      case EventKind::kAbort:
        ++m.aborted;
        ++m.abort_reasons[e.detail.empty() ? "unknown" : e.detail];
        break;
      case EventKind::kReadReturn:
        if (!e.read_only) break;
        ++m.queries;
        if (e.route == RouteKind::kReplica || e.route == RouteKind::kMixed) ++m.replica_queries;
        if (auto it = invoked.find(e.txn); it != invoked.end())
          latencies.push_back(static_cast<double>(e.at - it->second));
        break;
      case EventKind::kRcpPublish: ++m.rcp_publications; break;
      case EventKind::kModeChange: ++m.mode_changes; break;
      default: break;
    }
  }
  if (m.duration_s > 0.0) {
    m.txn_throughput_per_s = static_cast<double>(m.committed) / m.duration_s;
    m.query_throughput_per_s = static_cast<double>(m.queries) / m.duration_s;
    m.throughput_per_s = m.txn_throughput_per_s + m.query_throughput_per_s;
  }
  m.p50_latency_us = Percentile(latencies, 50.0);
  m.p99_latency_us = Percentile(latencies, 99.0);
  if (m.committed + m.aborted > 0)
    m.abort_rate = static_cast<double>(m.aborted) / static_cast<double>(m.committed + m.aborted);
  if (m.queries > 0)
    m.replica_read_share = static_cast<double>(m.replica_queries) / static_cast<double>(m.queries);
  for (const auto& [name, acc] : phases)
    m.phase_mean_us[name] = acc.second ? acc.first / static_cast<double>(acc.second) : 0.0;
  return m;
}

}  // namespace geosim
