#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "config/config.hpp"
#include "mac/mac_base.hpp"
#include "mac/slot_machine.hpp"
#include "net/phy.hpp"
#include "sim/kernel.hpp"

namespace railsim::mac {

// One cluster head running the backoff-queue TDMA. Each beacon interval
// starts with the beacon itself, then every nonempty time slot gets a fixed
// window in which its queue runs turns back to back. A turn that would
// overrun the window is deferred to the slot's next window; membership in a
// slot is capped by the queue capacity.
class BqCluster {
 public:
  BqCluster(Engine& eng, NodeHost& host, const config::BqMacConfig& cfg,
            const net::Phy& phy, ProtocolTrace* trace);

  // Schedules the first beacon; call after all setup-time joins are routed.
  void start(SimTime first_beacon);

  // Routes the node to a slot and queues it for admission there (one
  // admission per turn). Returns the slot id, or 0 when every eligible slot
  // is full. `at` gates admission: the join is not serviced before it.
  int request_join(int node, QosTier tier, SimTime at);
  void request_dequeue(int node);
  void kill_node(int node);  // silent power-off, the queue is not told

  bool serves(int node) const { return slot_of_.count(node) != 0; }
  int slot_of(int node) const;  // 0 when unknown
  bool slot_has_room(int slot, QosTier tier) const;
  int reserved_slot() const {
    return cfg_.reserved_safety_slot ? cfg_.slot_count : 0;
  }

  void set_max_turns(std::int64_t cap) { max_turns_ = cap; }
  // Fired when a dequeue broadcast completes and the node is out.
  void set_on_sorted(std::function<void(int node, SimTime at)> fn) {
    on_sorted_ = std::move(fn);
  }

  std::int64_t turns() const { return turns_; }
  std::int64_t collection_turns() const { return collect_turns_; }
  SimTime window_length() const { return window_; }
  // Airtime fraction per slot: busy turn time over offered window time.
  std::vector<double> slot_utilization() const;

 private:
  struct Pending {
    int node;
    QosTier tier;
    SimTime at;
  };
  struct Slot {
    BackoffSlotMachine machine;
    std::deque<Pending> pending;
    QosTier tier = QosTier::Regular;  // meaningful only while occupied
    bool collect_requested = false;
    int last_intent = -1;
    std::int64_t busy_us = 0;
    explicit Slot(int capacity) : machine(capacity) {}
  };

  void beacon();
  void probe();
  void run_turn(int slot, SimTime window_end);
  SimTime turn_duration(const TurnOutcome& out) const;
  int occupancy(int slot) const;
  int pick_slot(QosTier tier) const;

  Engine& eng_;
  NodeHost& host_;
  config::BqMacConfig cfg_;
  net::Phy phy_;
  ProtocolTrace* trace_;
  SimTime window_{0};
  std::vector<Slot> slots_;     // 1-based; slots_[0] is a dummy
  std::map<int, int> slot_of_;  // node -> slot, pending included
  std::map<int, int> miss_;     // consecutive failed probes per node
  std::size_t probe_cursor_ = 0;
  std::int64_t beacons_ = 0;
  std::int64_t turns_ = 0;
  std::int64_t collect_turns_ = 0;
  std::int64_t max_turns_ = 0;  // 0 = unlimited
  std::function<void(int, SimTime)> on_sorted_;
};

}  // namespace railsim::mac
