#include "geosim/txn/timestamp.h"

#include <algorithm>
#include <stdexcept>

namespace geosim {

const char* TsModeName(TsMode mode) {
  switch (mode) {
    case TsMode::kGtm: return "gtm";
    case TsMode::kGClock: return "gclock";
    case TsMode::kDual: return "dual";
  }
  return "?";
}

TsMode ParseTsMode(const std::string& name) {
  if (name == "gtm") return TsMode::kGtm;
  if (name == "gclock") return TsMode::kGClock;
  if (name == "dual") return TsMode::kDual;
  throw std::invalid_argument("unknown timestamp mode: " + name);
}

std::string Timestamp::ToString() const {
  return std::to_string(value) + "." + std::to_string(coordinator) + "." +
         std::to_string(local_seq);
}

uint64_t GClockValue(const ClockReading& reading) { return reading.t_clock + reading.t_err; }

uint64_t GtmIncrement(uint64_t counter) { return counter + 1; }

uint64_t DualValue(uint64_t gtm_counter, uint64_t gclock_value) {
  return std::max(gtm_counter, gclock_value) + 1;
}

}  // namespace geosim
