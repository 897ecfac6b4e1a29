#pragma once

#include <cstdint>
#include <deque>
#include <utility>

#include "geosim/sim/simulator.h"

namespace geosim {

// Clock-based estimate: clock_value - max_commit, floored at zero.
uint64_t StalenessFromClock(uint64_t clock_value, uint64_t max_commit_value);

// Rate-based estimate: (last_issued - max_commit) / rate, where rate is in
// timestamps per microsecond. A zero rate means an idle system, which is
// fresh by definition.
uint64_t StalenessFromRate(uint64_t last_issued, uint64_t max_commit_value, double rate_per_us);

// Issue rate of GTM timestamps over a sliding window, fed with counter
// samples the CN sees in GTM replies.
class IssueRateTracker {
 public:
  explicit IssueRateTracker(SimTime window_us) : window_us_(window_us) {}

  void Observe(SimTime now, uint64_t counter);
  // Timestamps per microsecond over the last window.
  double Rate(SimTime now) const;
  uint64_t last_counter() const { return samples_.empty() ? 0 : samples_.back().second; }

 private:
  SimTime window_us_;
  std::deque<std::pair<SimTime, uint64_t>> samples_;
};

}  // namespace geosim
