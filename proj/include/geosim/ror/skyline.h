#pragma once

#include <cstdint>
#include <vector>

#include "geosim/sim/simulator.h"

namespace geosim {

struct NodeMetrics {
  NodeId node = kNoNode;
  uint64_t staleness_us = 0;
  uint64_t latency_us = 0;
  bool healthy = true;
};

// True when a is no worse than b on both axes and strictly better on one.
bool Dominates(const NodeMetrics& a, const NodeMetrics& b);

// Non-dominated candidates under (staleness, latency) minimisation, sorted
// by staleness then node id. Unhealthy candidates are ignored.
std::vector<NodeMetrics> BuildSkyline(std::vector<NodeMetrics> candidates);

}  // namespace geosim
