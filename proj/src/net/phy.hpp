#pragma once

#include <cstdint>

#include "sim/time.hpp"

namespace railsim::net {

// Airtime model shared by every scheme: a fixed per-frame overhead (preamble,
// headers, and for contention MACs the SIFS+ACK exchange) plus the payload
// serialized at the channel bitrate, rounded up to whole microseconds.
struct Phy {
  std::int64_t bitrate_bps = 250000;
  SimTime overhead{480};

  SimTime tx_time(int payload_bytes) const {
    std::int64_t bits = static_cast<std::int64_t>(payload_bytes) * 8;
    std::int64_t us = (bits * 1000000 + bitrate_bps - 1) / bitrate_bps;
    return overhead + SimTime{us};
  }
};

}  // namespace railsim::net
