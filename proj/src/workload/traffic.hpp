#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "sim/rng.hpp"
#include "sim/time.hpp"

namespace railsim::workload {

enum class TrafficKind {
  Periodic,        // fixed inter-arrival
  UniformRandom,   // inter-arrival drawn per frame from [period_min, period_max]
  RateDriven,      // constant bitrate; inter-arrival = payload_bits / rate
  SituationDriven, // period supplied by the situation controller at runtime
  Silent,          // generates nothing (scripted walkthrough nodes)
};

// EDCA access class, only consulted by the DCF scheme
enum class AccessClass { Voip, Video, Streaming };

struct TrafficSpec {
  TrafficKind kind = TrafficKind::Periodic;
  int payload_bytes = 32;
  SimTime period{0};                     // Periodic
  SimTime period_min{0}, period_max{0};  // UniformRandom
  std::int64_t rate_lo_bps = 0;          // RateDriven; lo == hi means fixed
  std::int64_t rate_hi_bps = 0;
  AccessClass access = AccessClass::Streaming;
};

// Per-node generator. Rate-driven nodes draw their offered rate once, up
// front, so the realized load is a fixed-period stream for the whole run.
class TrafficSource {
 public:
  TrafficSource(const TrafficSpec& spec, RngStream rng)
      : spec_(spec), rng_(std::move(rng)) {
    if (spec_.kind == TrafficKind::RateDriven) {
      std::int64_t bps = spec_.rate_lo_bps;
      if (spec_.rate_hi_bps > spec_.rate_lo_bps)
        bps += static_cast<std::int64_t>(
            rng_.real01() *
            static_cast<double>(spec_.rate_hi_bps - spec_.rate_lo_bps));
      drawn_rate_bps_ = bps;
      // period in us = payload_bits * 1e6 / bps, rounded to the tick grid
      double us = static_cast<double>(spec_.payload_bytes) * 8.0 * 1e6 /
                  static_cast<double>(bps);
      fixed_period_ = SimTime{static_cast<std::int64_t>(us + 0.5)};
    } else if (spec_.kind == TrafficKind::Periodic) {
      fixed_period_ = spec_.period;
    } else if (spec_.kind == TrafficKind::SituationDriven) {
      fixed_period_ = spec_.period;  // initial period, controller may change it
    }
  }

  // next creation instant strictly after `now`; nullopt when the source is mute
  std::optional<SimTime> next_arrival(SimTime now) {
    switch (spec_.kind) {
      case TrafficKind::Silent:
        return std::nullopt;
      case TrafficKind::UniformRandom: {
        std::int64_t lo = spec_.period_min.us, hi = spec_.period_max.us;
        return now + SimTime{static_cast<std::int64_t>(
                         rng_.range(static_cast<std::uint64_t>(lo),
                                    static_cast<std::uint64_t>(hi)))};
      }
      default:
        return now + fixed_period_;
    }
  }

  void set_period(SimTime p) { fixed_period_ = p; }
  SimTime period() const { return fixed_period_; }
  std::int64_t drawn_rate_bps() const { return drawn_rate_bps_; }
  int payload_bytes() const { return spec_.payload_bytes; }
  AccessClass access() const { return spec_.access; }

 private:
  TrafficSpec spec_;
  RngStream rng_;
  SimTime fixed_period_{0};
  std::int64_t drawn_rate_bps_ = 0;
};

struct Frame {
  SimTime created{0};
  int payload_bytes = 0;
  int node = -1;
};

// Bounded FIFO. Overflow evicts the oldest frame so fresh telemetry survives.
class FrameBuffer {
 public:
  explicit FrameBuffer(int capacity) : capacity_(capacity) {}

  // returns the evicted frame when the push overflowed
  std::optional<Frame> push(const Frame& f) {
    std::optional<Frame> dropped;
    if (static_cast<int>(q_.size()) >= capacity_) {
      dropped = q_.front();
      q_.pop_front();
    }
    q_.push_back(f);
    return dropped;
  }

  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }
  const Frame& front() const { return q_.front(); }
  Frame pop() {
    Frame f = q_.front();
    q_.pop_front();
    return f;
  }

 private:
  int capacity_;
  std::deque<Frame> q_;
};

}  // namespace railsim::workload
