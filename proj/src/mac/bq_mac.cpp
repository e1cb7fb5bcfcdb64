#include "mac/bq_mac.hpp"

#include <algorithm>

namespace railsim::mac {

const char* to_string(QosTier t) {
  switch (t) {
    case QosTier::Regular: return "regular";
    case QosTier::Elevated: return "elevated";
    case QosTier::SafetyCritical: return "safety_critical";
  }
  return "?";
}

BqCluster::BqCluster(Engine& eng, NodeHost& host,
                     const config::BqMacConfig& cfg, const net::Phy& phy,
                     ProtocolTrace* trace)
    : eng_(eng), host_(host), cfg_(cfg), phy_(phy), trace_(trace) {
  window_ =
      SimTime{(cfg_.beacon_interval - cfg_.beacon_time).us / cfg_.slot_count};
  if (window_.us <= 0)
    throw InvariantViolation("beacon interval leaves no room for slot windows");
  slots_.reserve(cfg_.slot_count + 1);
  for (int i = 0; i <= cfg_.slot_count; ++i) slots_.emplace_back(cfg_.capacity);
}

void BqCluster::start(SimTime first_beacon) {
  eng_.schedule(first_beacon, "bq_beacon", [this] { beacon(); });
}

int BqCluster::occupancy(int slot) const {
  const Slot& s = slots_[slot];
  return s.machine.member_count() + static_cast<int>(s.pending.size());
}

int BqCluster::pick_slot(QosTier tier) const {
  int reserved = reserved_slot();
  // safety traffic heads straight for the reserved slot when one exists
  if (tier == QosTier::SafetyCritical && reserved != 0) {
    int occ = occupancy(reserved);
    if (occ == 0 || (occ < cfg_.capacity && slots_[reserved].tier == tier))
      return reserved;
  }
  for (int i = 1; i <= cfg_.slot_count; ++i) {
    if (i == reserved && tier != QosTier::SafetyCritical) continue;
    int occ = occupancy(i);
    if (occ > 0 && occ < cfg_.capacity && slots_[i].tier == tier) return i;
  }
  for (int i = 1; i <= cfg_.slot_count; ++i) {
    if (i == reserved && tier != QosTier::SafetyCritical) continue;
    if (occupancy(i) == 0) return i;
  }
  return 0;
}

bool BqCluster::slot_has_room(int slot, QosTier tier) const {
  if (slot < 1 || slot > cfg_.slot_count) return false;
  int occ = occupancy(slot);
  if (occ == 0) return true;
  return occ < cfg_.capacity && slots_[slot].tier == tier;
}

int BqCluster::slot_of(int node) const {
  auto it = slot_of_.find(node);
  return it == slot_of_.end() ? 0 : it->second;
}

int BqCluster::request_join(int node, QosTier tier, SimTime at) {
  if (slot_of_.count(node))
    throw InvariantViolation("join requested for a node already served");
  int s = pick_slot(tier);
  if (s == 0) return 0;
  Slot& slot = slots_[s];
  if (occupancy(s) == 0) slot.tier = tier;
  slot.pending.push_back({node, tier, at});
  slot_of_[node] = s;
  return s;
}

void BqCluster::request_dequeue(int node) {
  auto it = slot_of_.find(node);
  if (it == slot_of_.end())
    throw InvariantViolation("dequeue requested for a node not served");
  Slot& slot = slots_[it->second];
  if (slot.machine.is_member(node)) {
    slot.machine.request_dequeue(node);
    return;
  }
  // not yet admitted: the join request is simply withdrawn
  auto& q = slot.pending;
  q.erase(std::find_if(q.begin(), q.end(),
                       [node](const Pending& p) { return p.node == node; }));
  slot_of_.erase(it);
  miss_.erase(node);
}

void BqCluster::kill_node(int node) {
  auto it = slot_of_.find(node);
  if (it == slot_of_.end())
    throw InvariantViolation("kill requested for a node not served");
  Slot& slot = slots_[it->second];
  if (slot.machine.is_member(node)) {
    slot.machine.kill(node);  // stays in the queue as garbage until collected
    return;
  }
  auto& q = slot.pending;
  q.erase(std::find_if(q.begin(), q.end(),
                       [node](const Pending& p) { return p.node == node; }));
  slot_of_.erase(it);
  miss_.erase(node);
}

void BqCluster::probe() {
  // One liveness exchange per beacon, round-robin over every queued node in
  // slot order. Dead nodes fail the exchange; enough consecutive failures
  // flag their slot for a collection sweep.
  std::vector<std::pair<int, int>> roster;  // (slot, node)
  for (int i = 1; i <= cfg_.slot_count; ++i)
    for (int n : slots_[i].machine.ledger_nodes()) roster.emplace_back(i, n);
  if (roster.empty()) return;
  auto [s, node] = roster[probe_cursor_ % roster.size()];
  ++probe_cursor_;
  if (slots_[s].machine.member_alive(node)) {
    miss_[node] = 0;
    return;
  }
  if (++miss_[node] >= cfg_.miss_threshold) {
    slots_[s].collect_requested = true;
    miss_[node] = 0;
  }
}

void BqCluster::beacon() {
  SimTime t0 = eng_.now();
  ++beacons_;
  probe();
  for (int i = 1; i <= cfg_.slot_count; ++i) {
    Slot& slot = slots_[i];
    if (slot.machine.member_count() == 0 && slot.pending.empty())
      continue;  // dormant slot, its window stays silent
    SimTime ws = t0 + cfg_.beacon_time + SimTime{(i - 1) * window_.us};
    eng_.schedule(ws, "bq_window",
                  [this, i, we = ws + window_] { run_turn(i, we); });
  }
  eng_.schedule(t0 + cfg_.beacon_interval, "bq_beacon", [this] { beacon(); });
}

SimTime BqCluster::turn_duration(const TurnOutcome& out) const {
  SimTime sigma = cfg_.backoff_slot;
  switch (out.kind) {
    case TurnKind::Idle:
    case TurnKind::CollectIdle:
      return SimTime{out.wait_slots * sigma.us};
    case TurnKind::DequeueSort:
      return phy_.tx_time(0);
    case TurnKind::DequeueIntent:
      return SimTime{out.p_eff * sigma.us} + phy_.tx_time(0);
    case TurnKind::Data:
    case TurnKind::Enqueue:
    case TurnKind::CollectTx: {
      int bytes = out.carried_data ? host_.head_payload(out.transmitter) : 0;
      return SimTime{out.p_eff * sigma.us} + phy_.tx_time(bytes);
    }
  }
  return SimTime{0};
}

void BqCluster::run_turn(int slot, SimTime window_end) {
  Slot& S = slots_[slot];
  SimTime T = eng_.now();

  if (S.machine.member_count() == 0 && S.pending.empty()) {
    S.collect_requested = false;  // nothing left to collect
    return;                       // emptied mid-cycle, dormant from here
  }

  if (S.collect_requested && S.machine.mode() == BackoffSlotMachine::Mode::Normal &&
      !S.machine.has_pending_sort()) {
    S.machine.begin_collection();
    S.collect_requested = false;
  }

  int arrival = -1;
  if (S.machine.can_admit() && !S.pending.empty() &&
      S.pending.front().at <= T)
    arrival = S.pending.front().node;

  SimTime dur{0};
  auto out = S.machine.step_if(
      arrival, [this](int n) { return host_.node_has_data(n); },
      [&](const TurnOutcome& o) {
        dur = turn_duration(o);
        return T + dur <= window_end;
      });
  if (!out) {
    if (T == window_end - window_)
      throw InvariantViolation(
          "turn of " + std::to_string(dur.us) + "us cannot fit the " +
          std::to_string(window_.us) + "us window of slot " +
          std::to_string(slot));
    return;  // deferred to the slot's next window
  }

  ++turns_;
  S.busy_us += dur.us;

  switch (out->kind) {
    case TurnKind::Enqueue:
      S.pending.pop_front();
      break;
    case TurnKind::DequeueIntent:
      S.last_intent = out->transmitter;
      break;
    case TurnKind::DequeueSort: {
      int gone = S.last_intent;
      S.last_intent = -1;
      slot_of_.erase(gone);
      miss_.erase(gone);
      if (on_sorted_) on_sorted_(gone, T + dur);
      break;
    }
    case TurnKind::CollectTx:
    case TurnKind::CollectIdle:
      ++collect_turns_;
      break;
    default:
      break;
  }

  if (out->carried_data) {
    int bytes = host_.head_payload(out->transmitter);
    host_.begin_service(out->transmitter);
    SimTime tx_start = T + SimTime{out->p_eff * cfg_.backoff_slot.us};
    host_.finish_service(out->transmitter, T, tx_start,
                         tx_start + phy_.tx_time(bytes));
  }

  if (out->collection_ended) {
    // whoever the sweep erased is no longer served here
    for (auto it = slot_of_.begin(); it != slot_of_.end();) {
      if (it->second == slot && !S.machine.is_member(it->first)) {
        miss_.erase(it->first);
        it = slot_of_.erase(it);
      } else {
        ++it;
      }
    }
  }

  if (trace_) {
    auto ledger = S.machine.ledger_snapshot();
    std::sort(ledger.begin(), ledger.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    std::string snap;
    for (const auto& [n, p] : ledger) {
      if (!snap.empty()) snap += ',';
      snap += std::to_string(n);
      snap += ':';
      snap += std::to_string(p);
    }
    trace_->line(T, slot, to_string(out->kind), out->transmitter,
                 out->kind == TurnKind::Idle ? 0 : out->p_eff, snap);
  }

  if (max_turns_ > 0 && turns_ >= max_turns_) {
    eng_.stop();
    return;
  }
  if (T + dur < window_end)
    eng_.schedule(T + dur, "bq_turn",
                  [this, slot, window_end] { run_turn(slot, window_end); });
}

std::vector<double> BqCluster::slot_utilization() const {
  std::vector<double> u;
  u.reserve(cfg_.slot_count);
  double offered = static_cast<double>(beacons_) * window_.us;
  for (int i = 1; i <= cfg_.slot_count; ++i)
    u.push_back(offered > 0 ? slots_[i].busy_us / offered : 0.0);
  return u;
}

}  // namespace railsim::mac
