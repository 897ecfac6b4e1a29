#include "geosim/sim/simulator.h"

#include <cmath>

namespace geosim {

namespace {

constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t Mix(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xff;
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

const char* FaultKindName(FaultKind kind) {
  switch (kind) {
    case FaultKind::kNodeCrash: return "node_crash";
    case FaultKind::kNodeRecover: return "node_recover";
    case FaultKind::kClockDesync: return "clock_desync";
    case FaultKind::kLinkDelayOverride: return "link_delay_override";
  }
  return "unknown";
}

Simulator::Simulator(LatencyMatrix latency, uint64_t seed, SimTime start)
    : latency_(std::move(latency)), rng_(seed), now_(start) {
  latency_.Validate();
}

NodeId Simulator::AddNode(RegionId region, std::string name) {
  if (region >= latency_.regions()) throw std::out_of_range("region outside latency matrix");
  nodes_.push_back(NodeInfo{region, std::move(name)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Simulator::FindNode(const std::string& name) const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<NodeId>(i);
  }
  throw UnknownTargetError("unknown node: " + name);
}

void Simulator::CheckNode(NodeId node) const {
  if (node >= nodes_.size()) throw UnknownTargetError("unknown node id " + std::to_string(node));
}

EventId Simulator::Schedule(SimTime delay, std::function<void()> fn, NodeId owner,
                            const char* label) {
  return ScheduleAt(now_ + delay, std::move(fn), owner, label);
}

EventId Simulator::ScheduleAt(SimTime at, std::function<void()> fn, NodeId owner,
                              const char* label) {
  if (finished_) throw EngineStoppedError("simulation already finished");
  if (at < now_) at = now_;
  uint32_t inc = owner == kNoNode ? 0 : nodes_.at(owner).incarnation;
  EventId id = next_seq_++;
  queue_.push(Event{at, id, owner, inc, label, false, std::move(fn)});
  return id;
}

void Simulator::Cancel(EventId id) { cancelled_.insert(id); }

uint64_t Simulator::LinkExtra(NodeId src, NodeId dst) const {
  if (link_extra_.empty()) return 0;
  uint64_t extra = 0;
  auto look = [&](NodeId a, NodeId b) {
    auto it = link_extra_.find({a, b});
    if (it != link_extra_.end()) extra += it->second;
  };
  look(src, dst);
  look(dst, src);
  look(src, kNoNode);
  look(dst, kNoNode);
  return extra;
}

uint64_t Simulator::BaseDelay(NodeId src, NodeId dst) const {
  return latency_.delay(region_of(src), region_of(dst)) + LinkExtra(src, dst);
}

void Simulator::Send(NodeId src, NodeId dst, size_t bytes, std::function<void()> on_deliver,
                     const char* label, uint64_t extra_delay_us) {
  CheckNode(src);
  CheckNode(dst);
  if (finished_) throw EngineStoppedError("simulation already finished");
  ++totals_.messages_sent;
  if (!nodes_[src].alive) {
    ++totals_.messages_dropped;
    return;
  }
  RegionId rs = nodes_[src].region;
  RegionId rd = nodes_[dst].region;
  double base = static_cast<double>(latency_.delay(rs, rd));
  if (latency_.jitter_fraction > 0.0) {
    // Draw site: one uniform per message when jitter is configured.
    base *= 1.0 + Uniform01() * latency_.jitter_fraction;
  }
  uint64_t transfer = 0;
  if (uint64_t bw = latency_.bandwidth(rs, rd); bw > 0) {
    transfer = static_cast<uint64_t>(
        std::ceil(static_cast<double>(bytes) * 1'000'000.0 / static_cast<double>(bw)));
  }
  SimTime at = now_ + static_cast<uint64_t>(std::llround(base)) + transfer +
               LinkExtra(src, dst) + extra_delay_us;
  auto& last = last_delivery_[{src, dst}];
  if (at < last) at = last;
  last = at;
  EventId id = next_seq_++;
  queue_.push(Event{at, id, dst, nodes_[dst].incarnation, label, true, std::move(on_deliver)});
}

void Simulator::Trace(const Event& ev) {
  uint64_t h = Mix(trace_hash_, ev.at);
  h = Mix(h, ev.seq);
  h = Mix(h, ev.owner);
  for (const char* p = ev.label; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= kFnvPrime;
  }
  trace_hash_ = h;
  if (trace_enabled_) trace_.push_back(TraceEntry{ev.at, ev.seq, ev.owner, ev.label});
}

EngineStats Simulator::RunUntil(SimTime t) {
  EngineStats delta;
  while (!queue_.empty() && queue_.top().at <= t) {
    // priority_queue::top is const; the event is moved out before pop.
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (!cancelled_.empty()) {
      auto it = cancelled_.find(ev.seq);
      if (it != cancelled_.end()) {
        cancelled_.erase(it);
        continue;
      }
    }
    now_ = ev.at;
    if (ev.owner != kNoNode) {
      const NodeInfo& n = nodes_[ev.owner];
      if (!n.alive || n.incarnation != ev.incarnation) {
        if (ev.is_delivery) {
          ++delta.messages_dropped;
          ++totals_.messages_dropped;
        }
        continue;
      }
    }
    if (ev.is_delivery) {
      ++delta.messages_delivered;
      ++totals_.messages_delivered;
    }
    ++delta.events_processed;
    ++totals_.events_processed;
    Trace(ev);
    ev.fn();
  }
  if (t > now_) now_ = t;
  return delta;
}

void Simulator::InjectFault(const FaultSpec& spec) {
  CheckNode(spec.target);
  if (spec.kind == FaultKind::kLinkDelayOverride && spec.peer != kNoNode) CheckNode(spec.peer);
  if (spec.at < now_) throw std::invalid_argument("fault scheduled in the past");
  ScheduleAt(spec.at, [this, spec] { ApplyFault(spec); }, kNoNode, FaultKindName(spec.kind));
}

void Simulator::ApplyFault(const FaultSpec& spec) {
  NodeInfo& n = nodes_[spec.target];
  switch (spec.kind) {
    case FaultKind::kNodeCrash:
      if (!n.alive) return;
      n.alive = false;
      ++n.incarnation;
      break;
    case FaultKind::kNodeRecover:
      if (n.alive) return;
      n.alive = true;
      ++n.incarnation;
      break;
    case FaultKind::kLinkDelayOverride:
      link_extra_[{spec.target, spec.peer}] = spec.extra_delay_us;
      break;
    case FaultKind::kClockDesync:
      break;
  }
  for (auto& l : fault_listeners_) l(spec);
}

void Simulator::AddFaultListener(std::function<void(const FaultSpec&)> listener) {
  fault_listeners_.push_back(std::move(listener));
}

double Simulator::Uniform01() {
  return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
}

int64_t Simulator::UniformInt(int64_t lo, int64_t hi) {
  if (hi <= lo) return lo;
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(rng_() % span);
}

double Simulator::Exponential(double mean) {
  if (mean <= 0) return 0;
  double u = Uniform01();
  return -mean * std::log1p(-u);
}

}  // namespace geosim
