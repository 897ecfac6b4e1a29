#include "geosim/cli/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace geosim {

const char* ScenarioKindName(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kCluster: return "cluster";
    case ScenarioKind::kListing1: return "listing1";
    case ScenarioKind::kRcpExample: return "rcp_example";
  }
  return "?";
}

namespace {

// One TOML table whose keys must all be consumed.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }
  bool Has(const std::string& key) const { return table_ && table_->contains(key); }

  const toml::node* Node(const std::string& key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  [[noreturn]] void Fail(const std::string& key, const std::string& what) const {
    throw ConfigError(Path(key) + ": " + what);
  }

  std::string Path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  std::optional<double> Number(const std::string& key) {
    const toml::node* n = Node(key);
    if (!n) return std::nullopt;
    if (auto i = n->value<int64_t>(); i && n->is_integer()) return static_cast<double>(*i);
    if (auto d = n->value<double>(); d && n->is_floating_point()) return *d;
    Fail(key, "expected a number");
  }

  void U64(const std::string& key, uint64_t& out) {
    const toml::node* n = Node(key);
    if (!n) return;
    if (!n->is_integer()) Fail(key, "expected an integer");
    int64_t v = *n->value<int64_t>();
    if (v < 0) Fail(key, "must be non-negative");
    out = static_cast<uint64_t>(v);
  }

  void U32(const std::string& key, uint32_t& out) {
    uint64_t v = out;
    U64(key, v);
    if (v > UINT32_MAX) Fail(key, "too large");
    out = static_cast<uint32_t>(v);
  }

  void I64(const std::string& key, int64_t& out) {
    const toml::node* n = Node(key);
    if (!n) return;
    if (!n->is_integer()) Fail(key, "expected an integer");
    out = *n->value<int64_t>();
  }

  // Milliseconds (integer or fractional) into microseconds.
  void Ms(const std::string& key, uint64_t& out_us) {
    auto v = Number(key);
    if (!v) return;
    if (*v < 0) Fail(key, "must be non-negative");
    out_us = static_cast<uint64_t>(std::llround(*v * 1000.0));
  }

  void Dbl(const std::string& key, double& out) {
    if (auto v = Number(key)) out = *v;
  }

  void Bool(const std::string& key, bool& out) {
    const toml::node* n = Node(key);
    if (!n) return;
    if (!n->is_boolean()) Fail(key, "expected true or false");
    out = *n->value<bool>();
  }

  void Str(const std::string& key, std::string& out) {
    const toml::node* n = Node(key);
    if (!n) return;
    if (!n->is_string()) Fail(key, "expected a string");
    out = *n->value<std::string>();
  }

  const toml::table* Table(const std::string& key) {
    const toml::node* n = Node(key);
    if (!n) return nullptr;
    if (!n->is_table()) Fail(key, "expected a table");
    return n->as_table();
  }

  const toml::array* Array(const std::string& key) {
    const toml::node* n = Node(key);
    if (!n) return nullptr;
    if (!n->is_array()) Fail(key, "expected an array");
    return n->as_array();
  }

  void Finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      std::string key(k.str());
      if (!used_.count(key)) throw ConfigError("unknown key " + Path(key));
    }
  }

 private:
  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

std::vector<RegionId> RegionList(Section& s, const std::string& key) {
  std::vector<RegionId> out;
  const toml::array* a = s.Array(key);
  if (!a) return out;
  for (const auto& n : *a) {
    if (!n.is_integer() || *n.value<int64_t>() < 0) s.Fail(key, "expected region indices");
    out.push_back(static_cast<RegionId>(*n.value<int64_t>()));
  }
  return out;
}

std::vector<std::vector<uint64_t>> Matrix(Section& s, const std::string& key, double scale) {
  std::vector<std::vector<uint64_t>> out;
  const toml::array* rows = s.Array(key);
  if (!rows) return out;
  for (const auto& row : *rows) {
    if (!row.is_array()) s.Fail(key, "expected an array of arrays");
    std::vector<uint64_t> r;
    for (const auto& cell : *row.as_array()) {
      double v;
      if (cell.is_integer()) {
        v = static_cast<double>(*cell.value<int64_t>());
      } else if (cell.is_floating_point()) {
        v = *cell.value<double>();
      } else {
        s.Fail(key, "expected numbers");
      }
      if (v < 0) s.Fail(key, "must be non-negative");
      r.push_back(static_cast<uint64_t>(std::llround(v * scale)));
    }
    out.push_back(std::move(r));
  }
  return out;
}

TsMode Mode(Section& s, const std::string& key, TsMode def) {
  std::string name;
  s.Str(key, name);
  if (name.empty()) return def;
  try {
    TsMode m = ParseTsMode(name);
    return m;
  } catch (const std::invalid_argument&) {
    s.Fail(key, "unknown mode '" + name + "'");
  }
}

FaultKind ParseFaultKind(Section& s, const std::string& name) {
  for (FaultKind k : {FaultKind::kNodeCrash, FaultKind::kNodeRecover, FaultKind::kClockDesync,
                      FaultKind::kLinkDelayOverride})
    if (name == FaultKindName(k)) return k;
  s.Fail("kind", "unknown fault kind '" + name + "'");
}

void ReadTopology(Section s, TopologyConfig& t) {
  if (const toml::array* a = s.Array("regions")) {
    t.regions.clear();
    for (const auto& n : *a) {
      if (!n.is_string()) s.Fail("regions", "expected strings");
      t.regions.push_back(*n.value<std::string>());
    }
  }
  if (s.Has("one_way_delay_us") && s.Has("one_way_delay_ms"))
    s.Fail("one_way_delay_ms", "give the delay matrix in one unit only");
  if (s.Has("one_way_delay_us")) t.latency.one_way_delay_us = Matrix(s, "one_way_delay_us", 1.0);
  if (s.Has("one_way_delay_ms")) t.latency.one_way_delay_us = Matrix(s, "one_way_delay_ms", 1000.0);
  if (s.Has("bandwidth_bytes_per_s"))
    t.latency.bandwidth_bytes_per_s = Matrix(s, "bandwidth_bytes_per_s", 1.0);
  s.Dbl("jitter_fraction", t.latency.jitter_fraction);
  s.U32("compute_nodes", t.compute_nodes);
  s.U32("shards", t.shards);
  s.U32("replicas_per_shard", t.replicas_per_shard);
  if (s.Has("cn_regions")) t.cn_regions = RegionList(s, "cn_regions");
  if (s.Has("shard_regions")) t.shard_regions = RegionList(s, "shard_regions");
  if (s.Has("client_regions")) t.client_regions = RegionList(s, "client_regions");
  s.U32("gtm_region", t.gtm_region);
  if (const toml::table* rr = s.Table("replica_regions")) {
    Section sub(rr, s.Path("replica_regions"));
    for (const auto& [k, v] : *rr) {
      uint32_t r = 0;
      sub.U32(std::string(k.str()), r);
      t.replica_regions[std::string(k.str())] = r;
    }
  }
  s.Finish();
}

void ReadModes(Section s, ModesConfig& m) {
  m.initial_mode = Mode(s, "initial", m.initial_mode);
  s.Bool("enable_dual_wait", m.enable_dual_wait);
  if (const toml::array* a = s.Array("transitions")) {
    m.transitions.clear();
    for (const auto& n : *a) {
      if (!n.is_table()) s.Fail("transitions", "expected tables");
      Section t(n.as_table(), s.Path("transitions"));
      TransitionSpec spec;
      t.Ms("at_ms", spec.at_us);
      std::string dir;
      t.Str("direction", dir);
      try {
        spec.direction = ParseDirection(dir);
      } catch (const std::invalid_argument&) {
        t.Fail("direction", "expected gtm_to_gclock or gclock_to_gtm");
      }
      t.Finish();
      m.transitions.push_back(spec);
    }
  }
  s.Finish();
}

void ReadReplication(Section s, ReplicationConfig& r) {
  s.Ms("random_lag_max_ms", r.random_lag_max_us);
  s.Bool("sync_quorum", r.sync_quorum);
  s.Ms("read_block_timeout_ms", r.read_block_timeout_us);
  if (const toml::table* lo = s.Table("lag_override_ms")) {
    Section sub(lo, s.Path("lag_override_ms"));
    for (const auto& [k, v] : *lo) {
      uint64_t us = 0;
      sub.Ms(std::string(k.str()), us);
      r.lag_override_us[std::string(k.str())] = us;
    }
  }
  s.Finish();
}

void ReadRor(Section s, RorConfig& r) {
  s.Bool("enabled", r.enabled);
  s.Ms("rcp_interval_ms", r.rcp_interval_us);
  s.Ms("heartbeat_interval_ms", r.heartbeat_interval_us);
  s.Ms("metrics_interval_ms", r.metrics_interval_us);
  s.Bool("heartbeats", r.heartbeats);
  s.U32("miss_limit", r.miss_limit);
  s.Ms("collector_timeout_ms", r.collector_timeout_us);
  s.U32("collector", r.collector);
  s.Dbl("latency_alpha", r.latency_alpha);
  s.Finish();
}

void ReadWorkload(Section s, WorkloadSpec& w) {
  s.U32("clients", w.clients);
  s.Dbl("read_fraction", w.read_fraction);
  s.Dbl("multi_shard_fraction", w.multi_shard_fraction);
  s.Dbl("remote_fraction", w.remote_fraction);
  s.Dbl("ddl_fraction", w.ddl_fraction);
  s.U32("tables", w.tables);
  s.U64("keys_per_table", w.keys_per_table);
  s.U32("value_size", w.value_size);
  s.U32("keys_per_txn", w.keys_per_txn);
  s.U32("keys_per_query", w.keys_per_query);
  if (s.Has("staleness_bound_ms")) {
    uint64_t us = 0;
    s.Ms("staleness_bound_ms", us);
    w.staleness_bound_us = us;
  }
  s.Bool("replica_reads", w.replica_reads);
  s.Bool("read_your_writes", w.read_your_writes);
  std::string arrival;
  s.Str("arrival", arrival);
  if (arrival == "open") {
    w.arrival = ArrivalModel::kOpen;
  } else if (arrival == "closed") {
    w.arrival = ArrivalModel::kClosed;
  } else if (!arrival.empty()) {
    s.Fail("arrival", "expected open or closed");
  }
  if (s.Has("think_time_ms")) {
    double ms = 0;
    s.Dbl("think_time_ms", ms);
    if (ms < 0) s.Fail("think_time_ms", "must be non-negative");
    w.think_time_mean_us = ms * 1000.0;
  }
  s.Dbl("open_rate_per_s", w.open_rate_per_s);
  s.U64("max_ops", w.max_ops);
  s.Finish();
}

void ReadTimeouts(Section s, TimeoutConfig& t) {
  s.Ms("exec_ms", t.exec_us);
  s.Ms("prepare_ms", t.prepare_us);
  s.Ms("gtm_ms", t.gtm_us);
  s.Ms("finalize_retry_ms", t.finalize_retry_us);
  s.Ms("in_doubt_ms", t.in_doubt_us);
  s.Ms("inquiry_ms", t.inquiry_us);
  s.Ms("client_op_ms", t.client_op_us);
  s.Finish();
}

void ReadFaults(Section& root, std::vector<NamedFault>& faults) {
  const toml::array* a = root.Array("faults");
  if (!a) return;
  for (const auto& n : *a) {
    if (!n.is_table()) root.Fail("faults", "expected an array of tables");
    Section s(n.as_table(), "faults");
    NamedFault f;
    std::string kind;
    s.Str("kind", kind);
    f.kind = ParseFaultKind(s, kind);
    s.Str("target", f.target);
    s.Str("peer", f.peer);
    s.Ms("at_ms", f.at_us);
    s.I64("clock_offset_us", f.clock_offset_us);
    s.I64("clock_drift_ppm", f.clock_drift_ppm);
    s.Ms("extra_delay_ms", f.extra_delay_us);
    s.Finish();
    faults.push_back(f);
  }
}

void ReadListing1(Section s, ScenarioConfig& sc) {
  Listing1Params& p = sc.listing1;
  p.initial_mode = Mode(s, "initial_mode", p.initial_mode);
  s.Bool("enable_wait", p.enable_wait);
  s.U64("min_delay_us", p.min_delay_us);
  s.U64("max_delay_us", p.max_delay_us);
  s.U64("max_gap_us", p.max_gap_us);
  s.U64("sync_roundtrip_us", p.sync_roundtrip_us);
  s.U64("drift_bound_ppm", p.drift_bound_ppm);
  s.U64("epoch_us", p.epoch_us);
  s.U32("runs", sc.listing1_runs);
  if (p.min_delay_us > p.max_delay_us) s.Fail("min_delay_us", "exceeds max_delay_us");
  if (sc.listing1_runs == 0) s.Fail("runs", "must be positive");
  s.Finish();
}

ScenarioConfig FromTable(const toml::table& doc) {
  Section root(&doc, "");
  ScenarioConfig sc;

  Section scen(root.Table("scenario"), "scenario");
  std::string preset;
  scen.Str("preset", preset);
  if (preset == "three_city") {
    sc.cluster = ThreeCityConfig();
  } else if (!preset.empty() && preset != "none") {
    scen.Fail("preset", "unknown preset '" + preset + "'");
  }
  std::string kind = "cluster";
  scen.Str("kind", kind);
  if (kind == "cluster") {
    sc.kind = ScenarioKind::kCluster;
  } else if (kind == "listing1") {
    sc.kind = ScenarioKind::kListing1;
  } else if (kind == "rcp_example") {
    sc.kind = ScenarioKind::kRcpExample;
  } else {
    scen.Fail("kind", "expected cluster, listing1 or rcp_example");
  }
  ClusterConfig& c = sc.cluster;
  scen.Str("name", c.name);
  scen.U64("seed", c.seed);
  scen.Ms("duration_ms", c.duration_us);
  scen.U64("start_time_us", c.start_time_us);
  scen.Finish();

  if (const toml::table* t = root.Table("topology")) ReadTopology(Section(t, "topology"), c.topology);
  if (const toml::table* t = root.Table("network")) {
    Section s(t, "network");
    s.Ms("gtm_extra_delay_ms", c.gtm_extra_delay_us);
    s.Finish();
  }
  if (const toml::table* t = root.Table("clock")) {
    Section s(t, "clock");
    s.U64("sync_interval_us", c.clock.sync_interval_us);
    s.U64("sync_roundtrip_us", c.clock.sync_roundtrip_us);
    s.U64("drift_bound_ppm", c.clock.drift_bound_ppm);
    s.U64("epoch_us", c.clock.epoch_us);
    s.Finish();
  }
  if (const toml::table* t = root.Table("modes")) ReadModes(Section(t, "modes"), c.modes);
  if (const toml::table* t = root.Table("replication"))
    ReadReplication(Section(t, "replication"), c.replication);
  if (const toml::table* t = root.Table("ror")) ReadRor(Section(t, "ror"), c.ror);
  if (const toml::table* t = root.Table("workload")) ReadWorkload(Section(t, "workload"), c.workload);
  if (const toml::table* t = root.Table("timeouts")) ReadTimeouts(Section(t, "timeouts"), c.timeouts);
  ReadFaults(root, c.faults);
  if (const toml::table* t = root.Table("checks")) {
    Section s(t, "checks");
    s.Bool("external_serializability", c.checks.external_serializability);
    s.Bool("replica_consistency", c.checks.replica_consistency);
    s.Bool("monotonic_freshness", c.checks.monotonic_freshness);
    s.Bool("bounded_staleness", c.checks.bounded_staleness);
    s.Finish();
  }
  if (const toml::table* t = root.Table("mutations")) {
    Section s(t, "mutations");
    s.Bool("disable_commit_wait", c.mutations.disable_commit_wait);
    s.Bool("disable_rcp_clamp", c.mutations.disable_rcp_clamp);
    s.Bool("heartbeat_bypass_log", c.mutations.heartbeat_bypass_log);
    s.Finish();
  }
  sc.listing1.enable_wait = c.modes.enable_dual_wait;
  sc.listing1.initial_mode = c.modes.initial_mode;
  if (const toml::table* t = root.Table("listing1")) ReadListing1(Section(t, "listing1"), sc);
  if (const toml::table* t = root.Table("output")) {
    Section s(t, "output");
    s.Str("dir", sc.output.dir);
    s.Bool("history", sc.output.history);
    s.Finish();
  }
  root.Finish();

  c.workload.duration_us = c.duration_us;
  if (sc.kind == ScenarioKind::kCluster) {
    try {
      c.Validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return sc;
}

void SetNumericKey(toml::table& root, const std::string& dotted, double value) {
  toml::table* t = &root;
  std::string rest = dotted;
  for (;;) {
    size_t dot = rest.find('.');
    if (dot == std::string::npos) break;
    std::string part = rest.substr(0, dot);
    rest = rest.substr(dot + 1);
    toml::node* n = t->get(part);
    if (!n) {
      t->insert(part, toml::table{});
      n = t->get(part);
    }
    if (!n->is_table()) throw ConfigError("cannot set " + dotted + ": " + part + " is not a table");
    t = n->as_table();
  }
  if (rest.empty()) throw ConfigError("empty key in " + dotted);
  toml::node* existing = t->get(rest);
  if (existing && existing->is_boolean()) {
    if (value != 0.0 && value != 1.0) throw ConfigError("cannot set " + dotted + ": expected 0 or 1");
    t->insert_or_assign(rest, value == 1.0);
    return;
  }
  if (existing && !existing->is_number())
    throw ConfigError("cannot set " + dotted + ": not a numeric key");
  bool integral = std::floor(value) == value && std::fabs(value) < 9e15;
  bool want_float = existing && existing->is_floating_point();
  if (integral && !want_float) {
    t->insert_or_assign(rest, static_cast<int64_t>(value));
  } else {
    t->insert_or_assign(rest, value);
  }
}

}  // namespace

ScenarioConfig ParseScenario(const std::string& text, const std::string& source,
                             const KeyOverrides& overrides) {
  toml::table doc;
  try {
    doc = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
        << e.description();
    throw ConfigError(msg.str());
  }
  for (const auto& [key, value] : overrides) SetNumericKey(doc, key, value);
  return FromTable(doc);
}

ScenarioConfig LoadScenario(const std::string& path, const KeyOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str(), path, overrides);
}

}  // namespace geosim
