#include "geosim/ror/skyline.h"

#include <algorithm>
#include <limits>

namespace geosim {

bool Dominates(const NodeMetrics& a, const NodeMetrics& b) {
  return a.staleness_us <= b.staleness_us && a.latency_us <= b.latency_us &&
         (a.staleness_us < b.staleness_us || a.latency_us < b.latency_us);
}

std::vector<NodeMetrics> BuildSkyline(std::vector<NodeMetrics> candidates) {
  candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                  [](const NodeMetrics& m) { return !m.healthy; }),
                   candidates.end());
  std::sort(candidates.begin(), candidates.end(), [](const NodeMetrics& a, const NodeMetrics& b) {
    if (a.staleness_us != b.staleness_us) return a.staleness_us < b.staleness_us;
    if (a.latency_us != b.latency_us) return a.latency_us < b.latency_us;
    return a.node < b.node;
  });

  // Sweep staleness groups in ascending order. Within a group only the
  // minimum latency survives; it is kept when it beats every point of
  // strictly smaller staleness.
  std::vector<NodeMetrics> out;
  uint64_t best_before = std::numeric_limits<uint64_t>::max();
  size_t i = 0;
  while (i < candidates.size()) {
    size_t j = i;
    while (j < candidates.size() && candidates[j].staleness_us == candidates[i].staleness_us) ++j;
    uint64_t group_min = candidates[i].latency_us;
    if (group_min < best_before) {
      for (size_t k = i; k < j && candidates[k].latency_us == group_min; ++k)
        out.push_back(candidates[k]);
      best_before = group_min;
    }
    i = j;
  }
  std::stable_sort(out.begin(), out.end(), [](const NodeMetrics& a, const NodeMetrics& b) {
    if (a.staleness_us != b.staleness_us) return a.staleness_us < b.staleness_us;
    return a.node < b.node;
  });
  return out;
}

}  // namespace geosim
