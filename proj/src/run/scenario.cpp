#include "run/scenario.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <utility>

#include "mac/baselines.hpp"
#include "mac/bq_mac.hpp"
#include "net/channel.hpp"
#include "net/phy.hpp"
#include "rail/rail.hpp"
#include "sim/kernel.hpp"
#include "sim/rng.hpp"
#include "workload/traffic.hpp"

namespace railsim::run {
namespace {

mac::AccessClass to_mac_class(workload::AccessClass c) {
  switch (c) {
    case workload::AccessClass::Voip:
      return mac::AccessClass::Voip;
    case workload::AccessClass::Video:
      return mac::AccessClass::Video;
    case workload::AccessClass::Streaming:
      return mac::AccessClass::Streaming;
  }
  return mac::AccessClass::Legacy;
}

workload::TrafficSpec spec_of(const config::GroupConfig& g) {
  workload::TrafficSpec s;
  s.kind = g.kind;
  s.payload_bytes = g.payload;
  s.period = g.period;
  s.period_min = g.period_min;
  s.period_max = g.period_max;
  s.rate_lo_bps = g.rate_lo_bps;
  s.rate_hi_bps = g.rate_hi_bps;
  s.access = g.access;
  return s;
}

struct NodeState {
  explicit NodeState(int buffer_frames) : buf(buffer_frames) {}
  workload::FrameBuffer buf;
  std::optional<workload::Frame> inflight;
  std::string group;
  std::unique_ptr<workload::TrafficSource> src;
  EventHandle arrival = 0;
  bool arrival_armed = false;
  bool alive = true;
  bool scripted = false;      // enters via [script], not at start
  bool gateway_mode = false;  // served by the safety gateway, not the cluster
  int vehicle = 0;            // 1-based in topology runs, 0 otherwise
  int sensor = -1;            // index into the per-vehicle sensor list
  mac::QosTier tier = mac::QosTier::Regular;
};

class Runner : public mac::NodeHost {
 public:
  explicit Runner(const config::ScenarioConfig& cfg)
      : cfg_(cfg), phy_{cfg.phy.bitrate_bps, cfg.phy.overhead} {}

  RunResult run();

  bool node_has_data(int node) const override {
    return !nodes_[static_cast<std::size_t>(node)].buf.empty();
  }
  int head_payload(int node) const override {
    return nodes_[static_cast<std::size_t>(node)].buf.front().payload_bytes;
  }
  void begin_service(int node) override {
    NodeState& n = at(node);
    if (n.inflight)
      throw InvariantViolation("node " + std::to_string(node) +
                               " entered service twice");
    n.inflight = n.buf.pop();
  }
  void finish_service(int node, SimTime attempt_start, SimTime tx_start,
                      SimTime tx_end) override {
    NodeState& n = at(node);
    workload::DelaySample s;
    s.node = node;
    s.group = n.group;
    s.created = n.inflight->created;
    s.fulfilled = tx_end;
    s.queue_wait = attempt_start - s.created;
    s.access = tx_start - attempt_start;
    s.tx = tx_end - tx_start;
    metrics_.record_fulfilled(s);
    n.inflight.reset();
  }
  void abort_service(int node) override {
    NodeState& n = at(node);
    metrics_.count_dropped(node);
    n.inflight.reset();
  }

 private:
  struct Vehicle {
    std::unique_ptr<mac::BqCluster> cluster;
    std::deque<int> gw_queue;  // node id per frame waiting on the gateway
    bool gw_busy = false;
    int gw_node = -1;  // node whose frame is on the gateway right now
  };

  NodeState& at(int node) { return nodes_[static_cast<std::size_t>(node)]; }

  RngStream traffic_rng(int node) const {
    return RngStream::derive(cfg_.seed, static_cast<std::uint64_t>(node));
  }
  RngStream mac_rng(int node) const {
    return RngStream::derive(cfg_.seed,
                             100000 + static_cast<std::uint64_t>(node));
  }
  mac::ProtocolTrace* trace() { return cfg_.trace ? &ptrace_ : nullptr; }

  void setup_bench();
  void setup_topology();
  std::vector<int> join_order() const;
  void apply_script(const config::ScriptOp& op);

  void arrive(int node);
  void push_frame(int node, const workload::Frame& f);
  void schedule_next_arrival(int node, SimTime from);
  void notify(int node);

  void diag_slice(int vehicle, int node);
  void controller_tick();
  void deliver_alert(double speed, bool curve);
  void apply_tier(int node, mac::QosTier want, SimTime at);
  void leave_for_move(int node, SimTime at);
  void sorted_out(int node, SimTime at);
  void rejoin(int node, SimTime at);
  void gw_kick(int vehicle);

  const config::ScenarioConfig& cfg_;
  net::Phy phy_;
  Engine eng_;
  workload::Metrics metrics_;
  mac::ProtocolTrace ptrace_;
  std::string etrace_;
  std::vector<NodeState> nodes_;  // 1-based, [0] is a dummy

  std::unique_ptr<net::Channel> channel_;
  std::unique_ptr<mac::BqCluster> cluster_;  // bench queue scheme
  std::unique_ptr<mac::CsmaMac> csma_;
  std::unique_ptr<mac::LplMac> lpl_;
  std::unique_ptr<mac::DcfMac> dcf_;

  std::optional<rail::TrackMap> track_;
  std::optional<rail::TrainMotion> motion_;
  std::vector<Vehicle> vehicles_;    // 1-based, [0] is a dummy
  std::vector<int> tag_readers_;     // alive position_reader nodes
  std::map<int, char> pending_move_; // node -> 'g' gateway, 'r' rejoin,
                                     //         'j' rejoin after gateway drain
  int last_tag_ = -1;
  SimTime main_start_{0};

  RunResult res_;
};

RunResult Runner::run() {
  if (cfg_.trace)
    eng_.set_trace_sink(
        [this](SimTime t, std::uint64_t seq, const char* kind) {
          etrace_ += std::to_string(t.us);
          etrace_ += '\t';
          etrace_ += std::to_string(seq);
          etrace_ += '\t';
          etrace_ += kind;
          etrace_ += '\n';
        });

  int total = cfg_.total_nodes();
  nodes_.reserve(static_cast<std::size_t>(total) + 1);
  for (int i = 0; i <= total; ++i) nodes_.emplace_back(cfg_.buffer_frames);

  if (cfg_.topology)
    setup_topology();
  else
    setup_bench();

  res_.events = eng_.run_until(cfg_.horizon);

  for (int i = 1; i <= total; ++i) {
    const NodeState& n = nodes_[static_cast<std::size_t>(i)];
    std::int64_t left = static_cast<std::int64_t>(n.buf.size()) +
                        (n.inflight ? 1 : 0);
    if (left > 0) metrics_.set_residual(i, left);
  }
  res_.stats = metrics_.summarize(cfg_.warmup);

  if (cluster_) {
    res_.stats.collection_turns = cluster_->collection_turns();
    res_.stats.slot_utilization = cluster_->slot_utilization();
  } else if (!vehicles_.empty()) {
    std::vector<double> util;
    int cars = 0;
    for (const Vehicle& v : vehicles_) {
      if (!v.cluster) continue;
      res_.stats.collection_turns += v.cluster->collection_turns();
      std::vector<double> u = v.cluster->slot_utilization();
      if (util.empty()) util.assign(u.size(), 0.0);
      for (std::size_t k = 0; k < u.size(); ++k) util[k] += u[k];
      ++cars;
    }
    if (cars > 1)
      for (double& x : util) x /= cars;
    res_.stats.slot_utilization = std::move(util);
  }

  std::sort(res_.diagnosis.begin(), res_.diagnosis.end(),
            [](const DiagRecord& a, const DiagRecord& b) {
              return a.node < b.node;
            });
  res_.samples = metrics_.samples();
  res_.protocol_trace = ptrace_.text();
  res_.event_trace = std::move(etrace_);
  res_.ended_at = eng_.stopped() ? eng_.now() : cfg_.horizon;
  return std::move(res_);
}

// Node ids are always blocked per group so scripts and traces stay stable;
// the roster order only decides the sequence of setup-time joins, which is
// what spreads groups across time slots under the queue scheme.
std::vector<int> Runner::join_order() const {
  struct Span {
    int next;
    int left;
  };
  std::vector<Span> spans;
  int total = 0;
  for (const auto& g : cfg_.groups) {
    spans.push_back({total + 1, g.count});
    total += g.count;
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(total));
  if (cfg_.roster == config::RosterOrder::Blocked) {
    for (int i = 1; i <= total; ++i) order.push_back(i);
    return order;
  }
  while (static_cast<int>(order.size()) < total)
    for (Span& s : spans)
      if (s.left > 0) {
        order.push_back(s.next++);
        --s.left;
      }
  return order;
}

void Runner::setup_bench() {
  int base = 0;
  int gi = 0;
  for (const auto& g : cfg_.groups) {
    ++gi;
    std::string name = g.name.empty() ? "group" + std::to_string(gi) : g.name;
    for (int k = 1; k <= g.count; ++k) {
      int id = base + k;
      NodeState& n = at(id);
      n.group = name;
      n.scripted = g.scripted_join;
      n.src = std::make_unique<workload::TrafficSource>(spec_of(g),
                                                        traffic_rng(id));
      schedule_next_arrival(id, SimTime{0});
    }
    base += g.count;
  }

  switch (cfg_.scheme) {
    case config::Scheme::BackoffQueue: {
      config::BqMacConfig mc = cfg_.mac ? *cfg_.mac : config::BqMacConfig{};
      cluster_ = std::make_unique<mac::BqCluster>(eng_, *this, mc, phy_,
                                                  trace());
      cluster_->set_max_turns(cfg_.max_turns);
      for (int id : join_order())
        if (!at(id).scripted)
          cluster_->request_join(id, mac::QosTier::Regular, SimTime{0});
      // script ops land before the first beacon when both are due at t=0
      for (const auto& op : cfg_.script)
        eng_.schedule(op.at, "script", [this, op] { apply_script(op); });
      cluster_->start(SimTime{0});
      break;
    }
    case config::Scheme::Csma154: {
      config::CsmaConfig mc = cfg_.csma ? *cfg_.csma : config::CsmaConfig{};
      channel_ = std::make_unique<net::Channel>(eng_);
      csma_ = std::make_unique<mac::CsmaMac>(eng_, *this, *channel_, mc, phy_,
                                             trace());
      for (int id : join_order()) csma_->add_node(id, mac_rng(id));
      csma_->start(SimTime{0});
      break;
    }
    case config::Scheme::Bmac: {
      config::LplConfig mc = cfg_.lpl ? *cfg_.lpl : config::LplConfig{};
      channel_ = std::make_unique<net::Channel>(eng_);
      lpl_ = std::make_unique<mac::LplMac>(eng_, *this, *channel_, mc, phy_,
                                           trace());
      for (int id : join_order()) lpl_->add_node(id, mac_rng(id));
      break;
    }
    case config::Scheme::Dcf: {
      config::DcfConfig mc = cfg_.dcf ? *cfg_.dcf : config::DcfConfig{};
      channel_ = std::make_unique<net::Channel>(eng_);
      dcf_ = std::make_unique<mac::DcfMac>(eng_, *this, *channel_, mc, phy_,
                                           trace());
      int b = 0;
      std::vector<workload::AccessClass> cls(
          static_cast<std::size_t>(cfg_.total_nodes()) + 1,
          workload::AccessClass::Streaming);
      for (const auto& g : cfg_.groups) {
        for (int k = 1; k <= g.count; ++k)
          cls[static_cast<std::size_t>(b + k)] = g.access;
        b += g.count;
      }
      for (int id : join_order())
        dcf_->add_node(id, mac_rng(id),
                       to_mac_class(cls[static_cast<std::size_t>(id)]));
      break;
    }
  }
}

void Runner::apply_script(const config::ScriptOp& op) {
  using K = config::ScriptOp::Kind;
  NodeState& n = at(op.node);
  mac::BqCluster* c =
      cluster_ ? cluster_.get()
               : (n.vehicle ? vehicles_[static_cast<std::size_t>(n.vehicle)]
                                  .cluster.get()
                            : nullptr);
  if (!c) return;  // scripts only steer the queue scheme
  switch (op.kind) {
    case K::Join:
      c->request_join(op.node, n.tier, eng_.now());
      break;
    case K::Dequeue:
      c->request_dequeue(op.node);
      break;
    case K::Kill:
      c->kill_node(op.node);
      n.alive = false;
      if (n.arrival_armed) {
        eng_.cancel(n.arrival);
        n.arrival_armed = false;
      }
      break;
  }
}

void Runner::schedule_next_arrival(int node, SimTime from) {
  NodeState& n = at(node);
  if (!n.alive || !n.src) return;
  std::optional<SimTime> t = n.src->next_arrival(from);
  if (!t) return;
  n.arrival = eng_.schedule(*t, "arrival", [this, node] { arrive(node); });
  n.arrival_armed = true;
}

void Runner::arrive(int node) {
  NodeState& n = at(node);
  n.arrival_armed = false;
  push_frame(node, {eng_.now(), n.src->payload_bytes(), node});
  schedule_next_arrival(node, eng_.now());
}

void Runner::push_frame(int node, const workload::Frame& f) {
  NodeState& n = at(node);
  metrics_.count_created(node, n.group);
  if (n.buf.push(f)) metrics_.count_dropped(node);  // overflow evicts oldest
  notify(node);
}

void Runner::notify(int node) {
  NodeState& n = at(node);
  if (n.gateway_mode) {
    vehicles_[static_cast<std::size_t>(n.vehicle)].gw_queue.push_back(node);
    gw_kick(n.vehicle);
    return;
  }
  if (csma_) csma_->frame_ready(node);
  if (lpl_) lpl_->frame_ready(node);
  if (dcf_) dcf_->frame_ready(node);
  // the queue scheme pulls at turn boundaries, no nudge needed
}

void Runner::setup_topology() {
  const config::TopologyConfig& topo = *cfg_.topology;
  config::BqMacConfig mc = cfg_.mac ? *cfg_.mac : config::BqMacConfig{};
  track_.emplace(*cfg_.track);
  motion_.emplace(*cfg_.train, track_->length());

  int per = static_cast<int>(topo.sensors.size());
  SimTime slice = phy_.tx_time(0) + phy_.tx_time(0);  // probe out, echo back
  // the main phase waits out the diagnosis plus one guard slot
  main_start_ = topo.diagnose
                    ? SimTime{slice.us * per} + mc.backoff_slot
                    : SimTime{0};

  double v0 = motion_->speed_at(SimTime{0});
  double p0 = motion_->position_at(SimTime{0});
  bool curve0 = track_->curve_within(p0, p0 + topo.lookahead_m);
  last_tag_ = track_->tag_index(p0);

  vehicles_.resize(static_cast<std::size_t>(topo.vehicles) + 1);
  for (int v = 1; v <= topo.vehicles; ++v) {
    Vehicle& car = vehicles_[static_cast<std::size_t>(v)];
    car.cluster = std::make_unique<mac::BqCluster>(eng_, *this, mc, phy_,
                                                   trace());
    car.cluster->set_max_turns(cfg_.max_turns);
    car.cluster->set_on_sorted(
        [this](int node, SimTime t) { sorted_out(node, t); });
    for (int s = 0; s < per; ++s) {
      const config::SensorConfig& sc = topo.sensors[static_cast<std::size_t>(s)];
      int id = (v - 1) * per + s + 1;
      NodeState& n = at(id);
      n.vehicle = v;
      n.sensor = s;
      n.group = sc.cls;
      n.alive = !sc.dead;
      n.tier = rail::priority_tier(sc.cls, v0, curve0, topo.speed_threshold);
      if (n.alive) {
        workload::TrafficSpec spec;
        spec.kind = workload::TrafficKind::SituationDriven;
        spec.payload_bytes = sc.payload;
        spec.period = rail::adapted_period(sc, v0, curve0, topo.v_ref);
        n.src = std::make_unique<workload::TrafficSource>(spec,
                                                          traffic_rng(id));
        schedule_next_arrival(id, main_start_);
        if (sc.cls == "position_reader") tag_readers_.push_back(id);
      }
      if (topo.diagnose)
        eng_.schedule(SimTime{slice.us * s}, "diagnosis",
                      [this, v, id] { diag_slice(v, id); });
      else if (n.alive)
        car.cluster->request_join(id, n.tier, SimTime{0});
    }
    car.cluster->start(main_start_);
  }
  eng_.schedule(main_start_, "controller", [this] { controller_tick(); });
}

void Runner::diag_slice(int vehicle, int node) {
  NodeState& n = at(node);
  SimTime rtt = phy_.tx_time(0) + phy_.tx_time(0);
  res_.diagnosis.push_back(
      {node, vehicle, n.group, n.alive, rtt});
  if (cfg_.trace)
    ptrace_.line(eng_.now(), 0, n.alive ? "diag_ok" : "diag_dead", node, 0,
                 "");
  if (n.alive)
    vehicles_[static_cast<std::size_t>(vehicle)].cluster->request_join(
        node, n.tier, eng_.now());
}

void Runner::controller_tick() {
  const config::TopologyConfig& topo = *cfg_.topology;
  SimTime t = eng_.now();
  double pos = motion_->position_at(t);
  if (pos >= track_->length()) {
    eng_.stop();  // end of the line, wind the scenario down
    return;
  }
  double speed = motion_->speed_at(t);
  bool curve = track_->curve_within(pos, pos + topo.lookahead_m);

  int tag = track_->tag_index(pos);
  for (int k = last_tag_ + 1; k <= tag; ++k)  // one reading per tag crossed
    for (int id : tag_readers_)
      push_frame(id, {t, at(id).src->payload_bytes(), id});
  if (tag > last_tag_) last_tag_ = tag;

  ++res_.alerts;
  eng_.schedule(t + topo.hop_latency + topo.hop_latency, "alert",
                [this, speed, curve] { deliver_alert(speed, curve); });
  eng_.schedule(t + topo.controller_period, "controller",
                [this] { controller_tick(); });
}

void Runner::deliver_alert(double speed, bool curve) {
  const config::TopologyConfig& topo = *cfg_.topology;
  SimTime t = eng_.now();
  for (std::size_t id = 1; id < nodes_.size(); ++id) {
    NodeState& n = nodes_[id];
    if (n.vehicle == 0 || !n.alive || !n.src) continue;
    const config::SensorConfig& sc =
        topo.sensors[static_cast<std::size_t>(n.sensor)];
    SimTime p = rail::adapted_period(sc, speed, curve, topo.v_ref);
    // takes effect on the next inter-arrival; the pending one keeps its
    // spacing, which bounds staleness by one old period and cannot starve
    if (p != n.src->period()) n.src->set_period(p);
    mac::QosTier want =
        rail::priority_tier(sc.cls, speed, curve, topo.speed_threshold);
    if (want != n.tier) apply_tier(static_cast<int>(id), want, t);
  }
}

void Runner::apply_tier(int node, mac::QosTier want, SimTime at_t) {
  NodeState& n = at(node);
  Vehicle& car = vehicles_[static_cast<std::size_t>(n.vehicle)];
  bool was_sc = n.tier == mac::QosTier::SafetyCritical;
  bool is_sc = want == mac::QosTier::SafetyCritical;
  if (was_sc == is_sc) {
    // moves inside the non-critical tiers keep the current seat; the tier
    // matters again at the next join
    n.tier = want;
    return;
  }
  config::BqMacConfig mc = cfg_.mac ? *cfg_.mac : config::BqMacConfig{};
  if (is_sc) {
    if (mc.safety_gateway) {
      n.tier = want;
      ++res_.escalations;
      pending_move_[node] = 'g';
      leave_for_move(node, at_t);
      return;
    }
    int rs = car.cluster->reserved_slot();
    bool room = false;
    if (rs != 0) {
      room = car.cluster->slot_has_room(rs, want);
    } else {
      for (int s = 1; s <= mc.slot_count && !room; ++s)
        room = car.cluster->slot_has_room(s, want);
    }
    if (!room) {
      ++res_.escalation_warnings;  // stays put, retried at the next alert
      return;
    }
    n.tier = want;
    ++res_.escalations;
    pending_move_[node] = 'r';
    leave_for_move(node, at_t);
    return;
  }
  // demotion out of the safety tier
  if (n.gateway_mode) {
    n.tier = want;
    n.gateway_mode = false;
    ++res_.demotions;
    auto& q = car.gw_queue;
    q.erase(std::remove(q.begin(), q.end(), node), q.end());
    if (car.gw_node == node) {
      pending_move_[node] = 'j';  // rejoin once the frame on the wire is out
      return;
    }
    rejoin(node, at_t);
    return;
  }
  n.tier = want;
  ++res_.demotions;
  pending_move_[node] = 'r';
  leave_for_move(node, at_t);
}

// Starts the protocol exit for a tier move. A node still waiting on its join
// has no seat to vacate; the dequeue request withdraws the join on the spot
// and no sort turn follows, so the move completes right here instead.
void Runner::leave_for_move(int node, SimTime at_t) {
  NodeState& n = at(node);
  Vehicle& car = vehicles_[static_cast<std::size_t>(n.vehicle)];
  if (car.cluster->slot_of(node) != 0) {
    car.cluster->request_dequeue(node);
    if (car.cluster->slot_of(node) != 0) return;
  }
  sorted_out(node, at_t);
}

void Runner::sorted_out(int node, SimTime at_t) {
  auto it = pending_move_.find(node);
  if (it == pending_move_.end()) return;  // plain leave, nothing more to do
  char target = it->second;
  pending_move_.erase(it);
  NodeState& n = at(node);
  if (target == 'g') {
    n.gateway_mode = true;
    Vehicle& car = vehicles_[static_cast<std::size_t>(n.vehicle)];
    for (std::size_t k = 0; k < n.buf.size(); ++k)
      car.gw_queue.push_back(node);  // backlog rides the gateway too
    gw_kick(n.vehicle);
    return;
  }
  rejoin(node, at_t);
}

void Runner::rejoin(int node, SimTime at_t) {
  NodeState& n = at(node);
  Vehicle& car = vehicles_[static_cast<std::size_t>(n.vehicle)];
  int s = car.cluster->request_join(node, n.tier, at_t);
  if (s == 0) {
    // the seat vanished while the move was in flight; fall back anywhere
    ++res_.escalation_warnings;
    s = car.cluster->request_join(node, mac::QosTier::Regular, at_t);
  }
  if (s == 0)
    throw InvariantViolation("node " + std::to_string(node) +
                             " has no slot after a tier move");
}

void Runner::gw_kick(int vehicle) {
  Vehicle& car = vehicles_[static_cast<std::size_t>(vehicle)];
  if (car.gw_busy) return;
  while (!car.gw_queue.empty()) {
    int node = car.gw_queue.front();
    NodeState& n = at(node);
    if (!n.gateway_mode || n.buf.empty()) {
      car.gw_queue.pop_front();  // stale entry, frame is gone or rerouted
      continue;
    }
    car.gw_queue.pop_front();
    car.gw_busy = true;
    car.gw_node = node;
    SimTime t0 = eng_.now();
    SimTime done = t0 + cfg_.topology->safety_service;
    begin_service(node);
    eng_.schedule(done, "gateway_tx", [this, vehicle, node, t0] {
      SimTime te = eng_.now();
      finish_service(node, t0, t0, te);
      if (cfg_.trace) ptrace_.line(t0, 0, "gateway_tx", node, 0, "");
      Vehicle& c = vehicles_[static_cast<std::size_t>(vehicle)];
      c.gw_busy = false;
      c.gw_node = -1;
      auto it = pending_move_.find(node);
      if (it != pending_move_.end() && it->second == 'j') {
        pending_move_.erase(it);
        rejoin(node, te);
      }
      gw_kick(vehicle);
    });
    return;
  }
}

}  // namespace

RunResult run_scenario(const config::ScenarioConfig& cfg) {
  Runner r(cfg);
  return r.run();
}

}  // namespace railsim::run
