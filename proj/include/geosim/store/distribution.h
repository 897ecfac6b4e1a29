#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "geosim/repl/redo.h"

namespace geosim {

class RoutingError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Hash placement of keys onto primary shards. Keys look like "t3:k42";
// the part before the colon names the table.
class Distribution {
 public:
  explicit Distribution(uint32_t shard_count);

  uint32_t shard_count() const { return shard_count_; }
  ShardId ShardOf(const std::string& key) const;

  static std::string Key(uint32_t table, uint64_t index);
  static std::string TableName(uint32_t table);
  // "t3:k42" -> "t3". Keys without a colon are their own table.
  static std::string TableOf(const std::string& key);
  // Key that a DDL statement on the table locks on every shard.
  static std::string DdlKey(const std::string& table);
  static bool IsDdlKey(const std::string& key);

 private:
  uint32_t shard_count_;
};

uint64_t Fnv1a(const std::string& s);

}  // namespace geosim
