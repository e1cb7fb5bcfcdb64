#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "sim/time.hpp"

namespace railsim {

// Thrown when simulation state violates a protocol invariant. Carries enough
// context to print the failing turn; the CLI maps it to its own exit code.
struct InvariantViolation : std::runtime_error {
  explicit InvariantViolation(const std::string& what)
      : std::runtime_error(what) {}
};

using EventHandle = std::uint64_t;

// Discrete-event core. Events fire in (time, insertion sequence) order, which
// fixes tie-breaks and makes whole runs replayable. Single-threaded by design;
// one engine per scenario.
class Engine {
 public:
  using Callback = std::function<void()>;
  // (dispatch time, insertion sequence, kind label)
  using TraceSink = std::function<void(SimTime, std::uint64_t, const char*)>;

  SimTime now() const { return now_; }

  EventHandle schedule(SimTime at, const char* kind, Callback cb) {
    if (at < now_)
      throw InvariantViolation("event scheduled in the past at t=" +
                               format_time(now_) + " for " + format_time(at));
    EventHandle h = ++next_seq_;
    queue_.emplace(Key{at, h}, Entry{kind, std::move(cb)});
    pending_.emplace(h, Key{at, h});
    return h;
  }

  EventHandle schedule_in(SimTime delta, const char* kind, Callback cb) {
    return schedule(now_ + delta, kind, std::move(cb));
  }

  // True if the event existed and had not fired yet.
  bool cancel(EventHandle h) {
    auto it = pending_.find(h);
    if (it == pending_.end()) return false;
    queue_.erase(it->second);
    pending_.erase(it);
    return true;
  }

  // Dispatch everything with fire time <= horizon. Returns events dispatched.
  std::uint64_t run_until(SimTime horizon) {
    std::uint64_t count = 0;
    while (!stopped_ && !queue_.empty()) {
      auto it = queue_.begin();
      if (it->first.at > horizon) break;
      Key key = it->first;
      Entry entry = std::move(it->second);
      queue_.erase(it);
      pending_.erase(key.seq);
      now_ = key.at;
      ++count;
      if (trace_) trace_(key.at, key.seq, entry.kind);
      entry.cb();
    }
    if (now_ < horizon && !stopped_) now_ = horizon;
    return count;
  }

  // Stops the run loop after the current event; later events stay queued.
  void stop() { stopped_ = true; }
  bool stopped() const { return stopped_; }

  void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }
  std::size_t pending_count() const { return queue_.size(); }

 private:
  struct Key {
    SimTime at;
    std::uint64_t seq;
    bool operator<(const Key& o) const {
      if (at != o.at) return at < o.at;
      return seq < o.seq;
    }
  };
  struct Entry {
    const char* kind;
    Callback cb;
  };

  SimTime now_{0};
  std::uint64_t next_seq_ = 0;
  bool stopped_ = false;
  std::map<Key, Entry> queue_;
  std::unordered_map<EventHandle, Key> pending_;
  TraceSink trace_;
};

}  // namespace railsim
