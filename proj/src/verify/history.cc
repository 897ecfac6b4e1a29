#include "geosim/verify/history.h"

#include <stdexcept>

#include "json.hpp"

namespace geosim {

using nlohmann::json;

namespace {

constexpr const char* kEventNames[] = {"invoke",       "snapshot", "commit_request",
                                       "commit_visible", "abort",  "read_return",
                                       "rcp_publish",  "mode_change"};
constexpr const char* kRouteNames[] = {"none", "primary", "replica", "mixed"};

json TsToJson(const Timestamp& t) {
  return json{{"v", t.value}, {"e", t.err}, {"m", TsModeName(t.mode)},
              {"c", t.coordinator}, {"s", t.local_seq}};
}

Timestamp TsFromJson(const json& j) {
  Timestamp t;
  t.value = j.at("v").get<uint64_t>();
  t.err = j.at("e").get<uint64_t>();
  t.mode = ParseTsMode(j.at("m").get<std::string>());
  t.coordinator = j.at("c").get<uint32_t>();
  t.local_seq = j.at("s").get<uint64_t>();
  return t;
}

json ReadToJson(const ReadObservation& r) {
  json j{{"key", r.key}, {"shard", r.shard}, {"node", r.node}, {"replica", r.replica},
         {"version", TsToJson(r.version)}};
  if (r.own_write) j["own"] = true;
  if (r.value) j["value"] = *r.value;
  if (r.replica) {
    j["served_at"] = r.served_at;
    j["applied_lsn"] = r.applied_lsn;
    if (r.blocked_by) j["blocked_by"] = r.blocked_by;
  }
  return j;
}

ReadObservation ReadFromJson(const json& j) {
  ReadObservation r;
  r.key = j.at("key").get<std::string>();
  r.shard = j.at("shard").get<ShardId>();
  r.node = j.at("node").get<NodeId>();
  r.replica = j.at("replica").get<bool>();
  r.own_write = j.value("own", false);
  if (j.contains("value")) r.value = j.at("value").get<std::string>();
  r.version = TsFromJson(j.at("version"));
  r.served_at = j.value("served_at", SimTime{0});
  r.applied_lsn = j.value("applied_lsn", uint64_t{0});
  r.blocked_by = j.value("blocked_by", uint64_t{0});
  return r;
}

}  // namespace

const char* EventKindName(EventKind kind) { return kEventNames[static_cast<size_t>(kind)]; }

EventKind ParseEventKind(const std::string& name) {
  for (size_t i = 0; i < std::size(kEventNames); ++i)
    if (name == kEventNames[i]) return static_cast<EventKind>(i);
  throw std::runtime_error("unknown event kind: " + name);
}

const char* RouteKindName(RouteKind kind) { return kRouteNames[static_cast<size_t>(kind)]; }

RouteKind ParseRouteKind(const std::string& name) {
  for (size_t i = 0; i < std::size(kRouteNames); ++i)
    if (name == kRouteNames[i]) return static_cast<RouteKind>(i);
  throw std::runtime_error("unknown route kind: " + name);
}

HistoryEvent& History::Record(HistoryEvent event) {
  event.seq = events_.size();
  events_.push_back(std::move(event));
  return events_.back();
}

void History::WriteNdjson(std::ostream& out) const {
  json meta{{"type", "meta"},
            {"seed", meta_.seed},
            {"start_us", meta_.start_us},
            {"end_us", meta_.end_us},
            {"metrics_interval_us", meta_.metrics_interval_us},
            {"scenario", meta_.scenario}};
  out << meta.dump() << '\n';
  for (const auto& e : events_) {
    json j{{"type", "event"}, {"kind", EventKindName(e.kind)}, {"at", e.at},
           {"seq", e.seq},    {"txn", e.txn},                  {"client", e.client},
           {"node", e.node},  {"ts", TsToJson(e.ts)}};
    if (!e.keys.empty()) j["keys"] = e.keys;
    if (!e.reads.empty()) {
      json reads = json::array();
      for (const auto& r : e.reads) reads.push_back(ReadToJson(r));
      j["reads"] = std::move(reads);
    }
    if (e.route != RouteKind::kNone) j["route"] = RouteKindName(e.route);
    if (e.read_only) j["read_only"] = true;
    if (e.staleness_bound_us) j["bound_us"] = *e.staleness_bound_us;
    if (e.epoch) j["epoch"] = e.epoch;
    if (!e.detail.empty()) j["detail"] = e.detail;
    if (!e.phases.empty()) j["phases"] = e.phases;
    out << j.dump() << '\n';
  }
  for (const auto& log : logs_) {
    for (const auto& r : log.records) {
      json j{{"type", "redo"},   {"shard", log.shard},
             {"lsn", r.lsn},     {"kind", RedoKindName(r.kind)},
             {"txn", r.txn},     {"ts", TsToJson(r.commit_ts)},
             {"keys", r.keys},   {"payload", r.payload},
             {"appended_at", r.appended_at}};
      out << j.dump() << '\n';
    }
  }
}

History History::ReadNdjson(std::istream& in) {
  History h;
  std::map<ShardId, size_t> log_index;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      std::string type = j.at("type").get<std::string>();
      if (type == "meta") {
        h.meta_.seed = j.at("seed").get<uint64_t>();
        h.meta_.start_us = j.at("start_us").get<SimTime>();
        h.meta_.end_us = j.at("end_us").get<SimTime>();
        h.meta_.metrics_interval_us = j.at("metrics_interval_us").get<SimTime>();
        h.meta_.scenario = j.at("scenario").get<std::string>();
      } else if (type == "event") {
        HistoryEvent e;
        e.kind = ParseEventKind(j.at("kind").get<std::string>());
        e.at = j.at("at").get<SimTime>();
        e.txn = j.at("txn").get<uint64_t>();
        e.client = j.at("client").get<uint32_t>();
        e.node = j.at("node").get<NodeId>();
        e.ts = TsFromJson(j.at("ts"));
        if (j.contains("keys")) e.keys = j.at("keys").get<std::vector<std::string>>();
        if (j.contains("reads"))
          for (const auto& r : j.at("reads")) e.reads.push_back(ReadFromJson(r));
        if (j.contains("route")) e.route = ParseRouteKind(j.at("route").get<std::string>());
        e.read_only = j.value("read_only", false);
        if (j.contains("bound_us")) e.staleness_bound_us = j.at("bound_us").get<uint64_t>();
        e.epoch = j.value("epoch", uint64_t{0});
        e.detail = j.value("detail", std::string());
        if (j.contains("phases")) e.phases = j.at("phases").get<std::map<std::string, uint64_t>>();
        h.Record(std::move(e));
      } else if (type == "redo") {
        ShardId shard = j.at("shard").get<ShardId>();
        auto [it, inserted] = log_index.emplace(shard, h.logs_.size());
        if (inserted) h.logs_.push_back(ShardLog{shard, {}});
        RedoRecord r;
        r.lsn = j.at("lsn").get<uint64_t>();
        r.kind = ParseRedoKind(j.at("kind").get<std::string>());
        r.txn = j.at("txn").get<uint64_t>();
        r.commit_ts = TsFromJson(j.at("ts"));
        r.keys = j.at("keys").get<std::vector<std::string>>();
        r.payload = j.at("payload").get<std::string>();
        r.appended_at = j.at("appended_at").get<SimTime>();
        h.logs_[it->second].records.push_back(std::move(r));
      } else {
        throw std::runtime_error("unknown record type " + type);
      }
    } catch (const std::exception& ex) {
      throw std::runtime_error("history line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return h;
}

}  // namespace geosim
