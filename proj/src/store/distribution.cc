#include "geosim/store/distribution.h"

namespace geosim {

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Distribution::Distribution(uint32_t shard_count) : shard_count_(shard_count) {
  if (shard_count == 0) throw std::invalid_argument("shard count must be positive");
}

ShardId Distribution::ShardOf(const std::string& key) const {
  return static_cast<ShardId>(Fnv1a(key) % shard_count_);
}

std::string Distribution::Key(uint32_t table, uint64_t index) {
  return TableName(table) + ":k" + std::to_string(index);
}

std::string Distribution::TableName(uint32_t table) { return "t" + std::to_string(table); }

std::string Distribution::TableOf(const std::string& key) {
  auto pos = key.find(':');
  return pos == std::string::npos ? key : key.substr(0, pos);
}

std::string Distribution::DdlKey(const std::string& table) { return table + ":#ddl"; }

bool Distribution::IsDdlKey(const std::string& key) {
  return key.size() >= 5 && key.compare(key.size() - 5, 5, ":#ddl") == 0;
}

}  // namespace geosim
