#pragma once

#include <cstdint>
#include <vector>

namespace geosim {

using RegionId = uint32_t;

// One-way delays between regions plus optional per-link bandwidth caps.
// Neither matrix needs to be symmetric and the diagonal is the
// intra-region delay.
struct LatencyMatrix {
  std::vector<std::vector<uint64_t>> one_way_delay_us;
  double jitter_fraction = 0.0;
  // bytes/second; empty or 0 entries mean unlimited.
  std::vector<std::vector<uint64_t>> bandwidth_bytes_per_s;

  size_t regions() const { return one_way_delay_us.size(); }
  uint64_t delay(RegionId from, RegionId to) const;
  uint64_t bandwidth(RegionId from, RegionId to) const;

  // Throws std::invalid_argument on ragged matrices or jitter outside [0,1).
  void Validate() const;

  static LatencyMatrix Uniform(size_t regions, uint64_t intra_us, uint64_t inter_us);
};

}  // namespace geosim
