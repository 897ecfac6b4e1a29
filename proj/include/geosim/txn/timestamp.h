#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <tuple>

#include "geosim/clocks/clock_service.h"

namespace geosim {

enum class TsMode : uint8_t { kGtm = 0, kGClock = 1, kDual = 2 };

const char* TsModeName(TsMode mode);
// Accepts "gtm", "gclock", "dual"; throws std::invalid_argument otherwise.
TsMode ParseTsMode(const std::string& name);

// A commit or invocation timestamp. GTM counters and GClock clock values
// share one 64-bit value space; equal values are ordered by the issuing
// coordinator and its local sequence number.
struct Timestamp {
  uint64_t value = 0;
  uint64_t err = 0;
  TsMode mode = TsMode::kGtm;
  uint32_t coordinator = 0;
  uint64_t local_seq = 0;

  auto key() const { return std::tie(value, coordinator, local_seq); }

  friend bool operator==(const Timestamp& a, const Timestamp& b) { return a.key() == b.key(); }
  friend std::strong_ordering operator<=>(const Timestamp& a, const Timestamp& b) {
    return a.key() <=> b.key();
  }

  std::string ToString() const;
};

// The zero timestamp sorts before everything a coordinator can issue.
inline constexpr Timestamp kMinTimestamp{};

// TS_GClock = T_clock + T_err
uint64_t GClockValue(const ClockReading& reading);
// TS_GTM = TS_GTM + 1
uint64_t GtmIncrement(uint64_t counter);
// TS_DUAL = max(TS_GTM, TS_GClock) + 1
uint64_t DualValue(uint64_t gtm_counter, uint64_t gclock_value);

}  // namespace geosim
