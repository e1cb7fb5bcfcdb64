#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sim/kernel.hpp"

namespace railsim::mac {

enum class TurnKind {
  Idle,           // every member deferred (or queue empty)
  Data,           // ordinary transmission by the lowest-position active member
  Enqueue,        // newcomer admitted; transmits immediately at effective position 0
  DequeueIntent,  // leaving member announces exit and its position
  DequeueSort,    // coordinator broadcast applying the exit, no backoff
  CollectTx,      // sweep transmission at the matching counter value
  CollectIdle,    // sweep counter hit a garbage position
};

const char* to_string(TurnKind k);

struct TurnOutcome {
  TurnKind kind = TurnKind::Idle;
  int transmitter = -1;       // node id, -1 for idle and coordinator turns
  int p_eff = 0;              // backoff slots the winner waited
  int wait_slots = 0;         // slots of channel silence in this turn
  bool carried_data = false;  // transmission consumed a buffered frame
  bool collection_ended = false;
};

// One virtual queue: the per-time-slot backoff queue. Every member tracks its
// own position only; the machine also keeps a mirror ledger updated from the
// observable turn outcomes and cross-checks the two after every turn. Protocol
// decisions must never read the ledger (see LedgerGuard below).
class BackoffSlotMachine {
 public:
  struct Member {
    int node = -1;
    int self_pos = 0;   // the node's own knowledge of its queue position
    bool alive = true;
    bool wants_out = false;
    int memorized = -1;  // position remembered at sweep start, -1 outside sweeps
    bool heard = false;  // answered during the current sweep
  };

  enum class Mode { Normal, Collecting };

  explicit BackoffSlotMachine(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw InvariantViolation("queue capacity must be >= 1");
  }

  int capacity() const { return capacity_; }
  Mode mode() const { return mode_; }
  bool full() const { return static_cast<int>(members_.size()) >= capacity_; }
  int member_count() const { return static_cast<int>(members_.size()); }
  bool has_pending_sort() const { return pending_sort_.has_value(); }
  bool can_admit() const {
    return mode_ == Mode::Normal && !pending_sort_ && !full();
  }
  bool is_member(int node) const { return find(node) != nullptr; }

  // Requests are latched and consumed by later turns.
  void request_dequeue(int node);
  void kill(int node);  // node powers off silently; its position becomes garbage

  // Starts a garbage sweep. Returns false while a dequeue broadcast is still
  // pending or a sweep is already running.
  bool begin_collection();

  // Resolves one turn. `arrival` is the node granted admission this turn
  // (-1 for none; caller must check can_admit first). `has_data` is queried
  // for the winner and for an admitted newcomer.
  template <class HasData>
  TurnOutcome step(int arrival, HasData&& has_data) {
    TurnOutcome out = decide(arrival, has_data);
    commit(out);
    return out;
  }

  // Like step, but the turn only happens if `fits(outcome)` accepts it. Used
  // by the timed layer to defer turns that would straddle a window boundary:
  // a rejected turn leaves the machine untouched.
  template <class HasData, class Fits>
  std::optional<TurnOutcome> step_if(int arrival, HasData&& has_data,
                                     Fits&& fits) {
    TurnOutcome out = decide(arrival, has_data);
    if (!fits(const_cast<const TurnOutcome&>(out))) {
      staged_arrival_ = -1;
      staged_arrival_data_ = false;
      return std::nullopt;
    }
    commit(out);
    return out;
  }

  // Mirror ledger access, for checks and traces only. Guarded: protocol code
  // calling this from inside turn resolution is a harness failure.
  std::vector<std::pair<int, int>> ledger_snapshot() const;
  int ledger_position(int node) const;
  std::vector<int> ledger_nodes() const;  // admission order, dead included
  int last_collection_count() const { return last_collection_count_; }
  const std::vector<Member>& members() const { return members_; }

  // Whether the node answers a coordinator probe. Probing is an actual
  // exchange, not a ledger read, so it sees ground truth.
  bool member_alive(int node) const;

 private:
  struct PendingSort {
    int node;
    int p_out;
  };

  template <class HasData>
  TurnOutcome decide(int arrival, HasData&& has_data);
  TurnOutcome decide_collection();
  void commit(const TurnOutcome& out);
  void apply_ledger(const TurnOutcome& out);
  void check_invariants(const TurnOutcome& out) const;
  void end_collection();

  Member* find(int node);
  const Member* find(int node) const;
  int max_position() const;  // over every member, dead ones included

  int capacity_;
  Mode mode_ = Mode::Normal;
  int collect_counter_ = 0;  // next sweep value, 1..capacity while Collecting
  int last_collection_count_ = 0;
  std::optional<PendingSort> pending_sort_;
  std::vector<Member> members_;          // insertion order, never reordered
  std::vector<std::pair<int, int>> ledger_;  // node -> position mirror
  std::vector<bool> ledger_heard_;       // per ledger entry, reset each sweep
  // scratch for commit(), filled by decide()
  int staged_arrival_ = -1;
  bool staged_arrival_data_ = false;
};

// Test hook enforcing the self-knowledge discipline: while armed, any ledger
// read inside turn resolution throws. Protocol logic must run on member
// self-state alone.
class LedgerGuard {
 public:
  static void arm(bool on) { armed_ = on; }
  static bool armed() { return armed_; }

  struct ProtocolSection {
    ProtocolSection() { ++depth_; }
    ~ProtocolSection() { --depth_; }
  };

  static void on_ledger_read() {
    if (armed_ && depth_ > 0)
      throw InvariantViolation(
          "ledger consulted during turn resolution; positions are "
          "self-knowledge only");
  }

 private:
  static inline bool armed_ = false;
  static inline int depth_ = 0;
};

// --- inline turn resolution -------------------------------------------------

template <class HasData>
TurnOutcome BackoffSlotMachine::decide(int arrival, HasData&& has_data) {
  LedgerGuard::ProtocolSection section;
  staged_arrival_ = -1;
  staged_arrival_data_ = false;

  if (mode_ == Mode::Collecting) {
    if (arrival >= 0)
      throw InvariantViolation("admission during collection sweep");
    TurnOutcome out = decide_collection();
    if (out.kind == TurnKind::CollectTx)
      out.carried_data = has_data(out.transmitter);
    return out;
  }

  if (pending_sort_) {
    if (arrival >= 0)
      throw InvariantViolation("admission while sort broadcast pending");
    TurnOutcome out;
    out.kind = TurnKind::DequeueSort;
    out.transmitter = -1;
    out.p_eff = pending_sort_->p_out;
    out.wait_slots = 0;
    return out;
  }

  if (arrival >= 0) {
    if (full()) throw InvariantViolation("admission into a full queue");
    if (find(arrival)) throw InvariantViolation("admitted node already queued");
    TurnOutcome out;
    out.kind = TurnKind::Enqueue;
    out.transmitter = arrival;
    out.p_eff = 0;
    out.wait_slots = 0;
    out.carried_data = has_data(arrival);
    staged_arrival_ = arrival;
    staged_arrival_data_ = out.carried_data;
    return out;
  }

  // Ordinary turn: lowest self-position among members that either hold data
  // or want to leave. Everyone else defers and keeps silent.
  const Member* winner = nullptr;
  for (const Member& m : members_) {
    if (!m.alive) continue;
    bool active = m.wants_out || has_data(m.node);
    if (!active) continue;
    if (!winner || m.self_pos < winner->self_pos) winner = &m;
  }

  TurnOutcome out;
  if (!winner) {
    out.kind = TurnKind::Idle;
    out.wait_slots = max_position() + 1;
    return out;
  }
  out.transmitter = winner->node;
  out.p_eff = winner->self_pos;
  out.wait_slots = winner->self_pos;
  if (winner->wants_out) {
    out.kind = TurnKind::DequeueIntent;
    out.carried_data = false;  // exit announcements carry no payload
  } else {
    out.kind = TurnKind::Data;
    out.carried_data = true;
  }
  return out;
}

}  // namespace railsim::mac
