#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "sim/kernel.hpp"
#include "sim/time.hpp"

namespace railsim::net {

// Single broadcast medium. Overlapping transmissions destroy each other;
// every sender learns its own outcome when its frame ends. Recently finished
// frames are kept around so carrier sensing can look a short way back.
class Channel {
 public:
  explicit Channel(Engine& eng) : eng_(eng) {}

  using DoneFn = std::function<void(bool collided)>;

  bool busy_at(SimTime t) const {
    for (const Tx& tx : active_)
      if (tx.start <= t && t < tx.end) return true;
    return false;
  }

  // true when any frame overlapped [t0, t1)
  bool busy_between(SimTime t0, SimTime t1) const {
    for (const Tx& tx : active_)
      if (tx.start < t1 && tx.end > t0) return true;
    for (const Tx& tx : done_)
      if (tx.start < t1 && tx.end > t0) return true;
    return false;
  }

  void set_on_idle(std::function<void(SimTime)> fn) { on_idle_ = std::move(fn); }

  void begin(int node, SimTime end, DoneFn done) {
    SimTime now = eng_.now();
    if (end <= now) throw InvariantViolation("transmission must take time");
    bool clash = !active_.empty();
    for (Tx& tx : active_) tx.collided = true;
    active_.push_back({node, now, end, clash, std::move(done)});
    eng_.schedule(end, "tx_end", [this, node, end] { finish(node, end); });
  }

  int active_count() const { return static_cast<int>(active_.size()); }

 private:
  struct Tx {
    int node;
    SimTime start, end;
    bool collided;
    DoneFn done;
  };

  void finish(int node, SimTime end) {
    for (auto it = active_.begin(); it != active_.end(); ++it) {
      if (it->node != node || it->end != end) continue;
      Tx tx = std::move(*it);
      active_.erase(it);
      done_.push_back({tx.node, tx.start, tx.end, tx.collided, nullptr});
      prune();
      if (tx.done) tx.done(tx.collided);
      if (active_.empty() && on_idle_) on_idle_(eng_.now());
      return;
    }
    throw InvariantViolation("transmission ended twice");
  }

  void prune() {
    // carrier sense never looks back further than a few backoff windows
    SimTime cutoff = eng_.now() - SimTime{1000000};
    while (!done_.empty() && done_.front().end <= cutoff) done_.pop_front();
  }

  Engine& eng_;
  std::vector<Tx> active_;
  std::deque<Tx> done_;
  std::function<void(SimTime)> on_idle_;
};

}  // namespace railsim::net
