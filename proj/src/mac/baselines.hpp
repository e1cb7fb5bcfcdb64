#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "config/config.hpp"
#include "mac/mac_base.hpp"
#include "net/channel.hpp"
#include "net/phy.hpp"
#include "sim/kernel.hpp"
#include "sim/rng.hpp"

namespace railsim::mac {

// Slotted CSMA/CA under a beacon-framed superframe: contention only inside
// the active period, everything aligned to backoff-period boundaries, frames
// dropped after too many failed clear-channel assessments or collisions.
class CsmaMac {
 public:
  CsmaMac(Engine& eng, NodeHost& host, net::Channel& ch,
          const config::CsmaConfig& cfg, const net::Phy& phy,
          ProtocolTrace* trace)
      : eng_(eng), host_(host), ch_(ch), cfg_(cfg), phy_(phy), trace_(trace) {}

  void add_node(int node, RngStream rng);
  void start(SimTime first_beacon);
  void frame_ready(int node);  // buffer went nonempty while the node is idle

 private:
  struct Node {
    RngStream rng;
    int nb = 0;
    int be = 0;
    int periods = 0;  // backoff periods spent on the current frame
    int payload = 0;
    SimTime attempt{0};
    bool busy = false;
  };

  void begin_attempt(int node);
  void draw_and_arm(int node);
  void cca_done(int node, SimTime boundary);
  void tx_done(int node, SimTime s, SimTime e, bool collided);
  void fail_step(int node);  // busy medium or collision: widen, maybe drop

  SimTime cap_length() const {
    return SimTime{static_cast<std::int64_t>(cfg_.slot_count) *
                   cfg_.slot_duration.us};
  }
  SimTime cap_start_of(std::int64_t frame) const {
    return first_beacon_ + SimTime{frame * cfg_.beacon_interval.us} +
           cfg_.beacon_time;
  }
  std::int64_t frame_index(SimTime t) const {
    if (t <= first_beacon_) return 0;
    return (t - first_beacon_).us / cfg_.beacon_interval.us;
  }
  SimTime next_boundary(SimTime t) const;
  SimTime after_periods(SimTime t, int periods) const;

  Engine& eng_;
  NodeHost& host_;
  net::Channel& ch_;
  config::CsmaConfig cfg_;
  net::Phy phy_;
  ProtocolTrace* trace_;
  SimTime first_beacon_{0};
  bool started_ = false;
  std::map<int, Node> nodes_;
};

// Low-power-listening MAC: unslotted, no coordinator. Every data frame is
// preceded by a preamble as long as the receivers' check interval; carrier
// sense covers one backoff slot, so senders that commit within the same slot
// destroy each other. Retries are unbounded.
class LplMac {
 public:
  LplMac(Engine& eng, NodeHost& host, net::Channel& ch,
         const config::LplConfig& cfg, const net::Phy& phy,
         ProtocolTrace* trace)
      : eng_(eng), host_(host), ch_(ch), cfg_(cfg), phy_(phy), trace_(trace) {}

  void add_node(int node, RngStream rng);
  void frame_ready(int node);

 private:
  struct Node {
    RngStream rng;
    int periods = 0;
    int payload = 0;
    SimTime attempt{0};
    bool busy = false;
  };

  void begin_attempt(int node);
  void arm_sample(int node, int slots);
  void sample(int node, SimTime s0);
  void tx_done(int node, SimTime s, SimTime e, bool collided);

  Engine& eng_;
  NodeHost& host_;
  net::Channel& ch_;
  config::LplConfig cfg_;
  net::Phy phy_;
  ProtocolTrace* trace_;
  std::map<int, Node> nodes_;
};

enum class AccessClass { Legacy, Voip, Video, Streaming };

// Contention window bounds for one access class, quartered or halved from
// the base DCF window in the usual prioritized fashion.
std::pair<int, int> edca_bounds(AccessClass cls, int cw_min, int cw_max);

// Distributed coordination: arrivals wait out an interframe space plus a
// drawn number of idle slots, freezing the countdown whenever the medium is
// busy. Simultaneous expiry means a collision; losers double their window
// and redraw. Retries are unbounded.
class DcfMac {
 public:
  DcfMac(Engine& eng, NodeHost& host, net::Channel& ch,
         const config::DcfConfig& cfg, const net::Phy& phy,
         ProtocolTrace* trace)
      : eng_(eng), host_(host), ch_(ch), cfg_(cfg), phy_(phy), trace_(trace) {
    ch_.set_on_idle([this](SimTime te) { medium_idle(te); });
  }

  void add_node(int node, RngStream rng, AccessClass cls);
  void frame_ready(int node);

  static int widened(int cw, int cw_max) {
    return cw * 2 + 1 > cw_max ? cw_max : cw * 2 + 1;
  }

 private:
  struct Node {
    RngStream rng;
    int cw_min = 31;
    int cw_max = 1023;
    int cw = 31;
    int k = 0;        // remaining backoff slots
    int periods = 0;  // slots drawn for the current frame
    int payload = 0;
    SimTime attempt{0};
    SimTime base{0};  // countdown reference while armed
    EventHandle fire{};
    bool busy = false;
    bool armed = false;
    bool transmitting = false;
  };

  void begin_attempt(int node);
  void arm(int node, SimTime base);
  void fire(int node);
  void tx_done(int node, SimTime s, SimTime e, bool collided);
  void medium_idle(SimTime te);

  Engine& eng_;
  NodeHost& host_;
  net::Channel& ch_;
  config::DcfConfig cfg_;
  net::Phy phy_;
  ProtocolTrace* trace_;
  std::map<int, Node> nodes_;
};

}  // namespace railsim::mac
