#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "geosim/sim/latency.h"

namespace geosim {

// Microseconds of simulated true time.
using SimTime = uint64_t;
using NodeId = uint32_t;
using EventId = uint64_t;

inline constexpr NodeId kNoNode = UINT32_MAX;

class EngineStoppedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnknownTargetError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class FaultKind { kNodeCrash, kNodeRecover, kClockDesync, kLinkDelayOverride };

const char* FaultKindName(FaultKind kind);

struct FaultSpec {
  FaultKind kind = FaultKind::kNodeCrash;
  NodeId target = kNoNode;
  // Link faults only: the other end of the link, kNoNode meaning every peer.
  NodeId peer = kNoNode;
  SimTime at = 0;
  // kClockDesync
  int64_t clock_offset_us = 0;
  int64_t clock_drift_ppm = 0;
  // kLinkDelayOverride: extra one-way delay in both directions.
  uint64_t extra_delay_us = 0;
};

struct EngineStats {
  uint64_t events_processed = 0;
  uint64_t messages_sent = 0;
  uint64_t messages_delivered = 0;
  uint64_t messages_dropped = 0;
};

struct TraceEntry {
  SimTime at;
  uint64_t seq;
  NodeId owner;
  const char* label;
};

// Single-threaded discrete-event engine. Events at equal times run in
// insertion order. Messages travel over FIFO channels per (src, dst) pair
// and are dropped when the destination is down at delivery time or has
// crashed since the message was sent.
class Simulator {
 public:
  Simulator(LatencyMatrix latency, uint64_t seed, SimTime start = 0);

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  NodeId AddNode(RegionId region, std::string name);
  size_t node_count() const { return nodes_.size(); }
  RegionId region_of(NodeId node) const { return nodes_.at(node).region; }
  const std::string& name_of(NodeId node) const { return nodes_.at(node).name; }
  bool alive(NodeId node) const { return nodes_.at(node).alive; }
  uint32_t incarnation(NodeId node) const { return nodes_.at(node).incarnation; }
  // Throws UnknownTargetError.
  NodeId FindNode(const std::string& name) const;

  SimTime now() const { return now_; }
  const LatencyMatrix& latency() const { return latency_; }

  // Runs fn at now + delay. When owner is a node, the event is discarded if
  // that node crashes before it fires.
  EventId Schedule(SimTime delay, std::function<void()> fn, NodeId owner = kNoNode,
                   const char* label = "event");
  EventId ScheduleAt(SimTime at, std::function<void()> fn, NodeId owner = kNoNode,
                     const char* label = "event");
  void Cancel(EventId id);

  // Delivery at now + delay * (1 + u * jitter) + bytes / bandwidth + extra,
  // never earlier than the previous delivery on the same channel.
  void Send(NodeId src, NodeId dst, size_t bytes, std::function<void()> on_deliver,
            const char* label = "msg", uint64_t extra_delay_us = 0);
  // Propagation delay without jitter; what a node would measure as the
  // one-way latency of an idle link.
  uint64_t BaseDelay(NodeId src, NodeId dst) const;

  EngineStats RunUntil(SimTime t);
  // Marks the run complete; later Schedule calls throw EngineStoppedError.
  void Finish() { finished_ = true; }
  bool finished() const { return finished_; }

  void InjectFault(const FaultSpec& spec);
  // Listeners run after the engine applied a fault (crash/recover flags).
  void AddFaultListener(std::function<void(const FaultSpec&)> listener);

  const EngineStats& totals() const { return totals_; }

  // Seeded randomness. Every draw site is a call into one of these.
  uint64_t NextRandom() { return rng_(); }
  double Uniform01();
  // Inclusive range.
  int64_t UniformInt(int64_t lo, int64_t hi);
  double Exponential(double mean);

  void EnableTrace(bool on) { trace_enabled_ = on; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  // FNV-1a over (time, seq, owner, label) of every processed event.
  uint64_t trace_hash() const { return trace_hash_; }

 private:
  struct NodeInfo {
    RegionId region;
    std::string name;
    bool alive = true;
    uint32_t incarnation = 0;
  };

  struct Event {
    SimTime at;
    uint64_t seq;
    NodeId owner;
    uint32_t incarnation;
    const char* label;
    bool is_delivery;
    std::function<void()> fn;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  void ApplyFault(const FaultSpec& spec);
  void CheckNode(NodeId node) const;
  uint64_t LinkExtra(NodeId src, NodeId dst) const;
  void Trace(const Event& ev);

  LatencyMatrix latency_;
  std::mt19937_64 rng_;
  SimTime now_;
  uint64_t next_seq_ = 0;
  bool finished_ = false;
  std::vector<NodeInfo> nodes_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<EventId> cancelled_;
  std::map<std::pair<NodeId, NodeId>, SimTime> last_delivery_;
  std::map<std::pair<NodeId, NodeId>, uint64_t> link_extra_;
  std::vector<std::function<void(const FaultSpec&)>> fault_listeners_;
  EngineStats totals_;
  bool trace_enabled_ = false;
  std::vector<TraceEntry> trace_;
  uint64_t trace_hash_ = 1469598103934665603ULL;
};

}  // namespace geosim
