#include "geosim/ror/staleness.h"

#include <cmath>

namespace geosim {

uint64_t StalenessFromClock(uint64_t clock_value, uint64_t max_commit_value) {
  return clock_value > max_commit_value ? clock_value - max_commit_value : 0;
}

uint64_t StalenessFromRate(uint64_t last_issued, uint64_t max_commit_value, double rate_per_us) {
  if (rate_per_us <= 0.0 || last_issued <= max_commit_value) return 0;
  return static_cast<uint64_t>(
      std::llround(static_cast<double>(last_issued - max_commit_value) / rate_per_us));
}

void IssueRateTracker::Observe(SimTime now, uint64_t counter) {
  if (!samples_.empty() && counter < samples_.back().second) return;
  samples_.emplace_back(now, counter);
  // Keep one sample older than the window as the rate's starting point.
  while (samples_.size() > 2 && samples_[1].first + window_us_ <= now) samples_.pop_front();
}

double IssueRateTracker::Rate(SimTime now) const {
  if (samples_.size() < 2) return 0.0;
  const auto& first = samples_.front();
  const auto& last = samples_.back();
  SimTime span = now > first.first ? now - first.first : 0;
  if (span == 0) return 0.0;
  return static_cast<double>(last.second - first.second) / static_cast<double>(span);
}

}  // namespace geosim
