#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geosim/coord/cluster_config.h"
#include "geosim/txn/listing1.h"

namespace geosim {

// Malformed, unknown or out-of-range configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind : uint8_t { kCluster, kListing1, kRcpExample };

const char* ScenarioKindName(ScenarioKind kind);

struct OutputConfig {
  std::string dir;
  bool history = true;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kCluster;
  ClusterConfig cluster;
  Listing1Params listing1;
  // Commit-wait anomaly scenario: number of seeded interleavings, using
  // seeds seed .. seed+runs-1.
  uint32_t listing1_runs = 100;
  OutputConfig output;
};

// Numeric overrides applied to the document before it is read, keyed by
// dotted path ("network.gtm_extra_delay_ms"). Sweeps use these.
using KeyOverrides = std::vector<std::pair<std::string, double>>;

// Strict parse: unknown sections or keys are errors. Throws ConfigError.
ScenarioConfig LoadScenario(const std::string& path, const KeyOverrides& overrides = {});
ScenarioConfig ParseScenario(const std::string& text, const std::string& source = "<string>",
                             const KeyOverrides& overrides = {});

}  // namespace geosim
