#include "geosim/sim/latency.h"

#include <stdexcept>

namespace geosim {

uint64_t LatencyMatrix::delay(RegionId from, RegionId to) const {
  return one_way_delay_us.at(from).at(to);
}

uint64_t LatencyMatrix::bandwidth(RegionId from, RegionId to) const {
  if (from >= bandwidth_bytes_per_s.size()) return 0;
  const auto& row = bandwidth_bytes_per_s[from];
  return to < row.size() ? row[to] : 0;
}

void LatencyMatrix::Validate() const {
  if (one_way_delay_us.empty()) throw std::invalid_argument("latency matrix is empty");
  for (const auto& row : one_way_delay_us) {
    if (row.size() != one_way_delay_us.size()) {
      throw std::invalid_argument("latency matrix must be square");
    }
  }
  if (!bandwidth_bytes_per_s.empty()) {
    if (bandwidth_bytes_per_s.size() != one_way_delay_us.size()) {
      throw std::invalid_argument("bandwidth matrix must match latency matrix");
    }
    for (const auto& row : bandwidth_bytes_per_s) {
      if (row.size() != one_way_delay_us.size()) {
        throw std::invalid_argument("bandwidth matrix must be square");
      }
    }
  }
  if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0)) {
    throw std::invalid_argument("jitter_fraction must be in [0,1)");
  }
}

LatencyMatrix LatencyMatrix::Uniform(size_t regions, uint64_t intra_us, uint64_t inter_us) {
  LatencyMatrix m;
  m.one_way_delay_us.assign(regions, std::vector<uint64_t>(regions, inter_us));
  for (size_t i = 0; i < regions; ++i) m.one_way_delay_us[i][i] = intra_us;
  return m;
}

}  // namespace geosim
