#pragma once

#include <string>

#include "sim/time.hpp"

namespace railsim::mac {

enum class QosTier { Regular = 0, Elevated = 1, SafetyCritical = 2 };

const char* to_string(QosTier t);

// Services the scenario runner provides to a MAC. The runner owns the node
// buffers and the metrics; a MAC pulls frames through this interface and
// reports the service times back.
class NodeHost {
 public:
  virtual ~NodeHost() = default;

  virtual bool node_has_data(int node) const = 0;
  // Payload bytes of the frame at the head of the node's buffer.
  virtual int head_payload(int node) const = 0;
  // Head frame leaves the buffer and becomes the node's in-flight frame.
  virtual void begin_service(int node) = 0;
  // In-flight frame delivered; the three instants bound the delay breakdown.
  virtual void finish_service(int node, SimTime attempt_start, SimTime tx_start,
                              SimTime tx_end) = 0;
  // In-flight frame lost (access failure after the final retry).
  virtual void abort_service(int node) = 0;
};

// Tab-separated per-turn log shared by every scheme:
//   ticks  slot  kind  transmitter  p_eff  queue_snapshot
// Contention schemes have no queue; they log "-" in the snapshot column and 0
// in the slot column.
class ProtocolTrace {
 public:
  void line(SimTime tick, int slot, const char* kind, int transmitter,
            int p_eff, const std::string& snapshot) {
    text_ += std::to_string(tick.us);
    text_ += '\t';
    text_ += std::to_string(slot);
    text_ += '\t';
    text_ += kind;
    text_ += '\t';
    if (transmitter < 0)
      text_ += '-';
    else
      text_ += std::to_string(transmitter);
    text_ += '\t';
    text_ += std::to_string(p_eff);
    text_ += '\t';
    text_ += snapshot.empty() ? "-" : snapshot;
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

}  // namespace railsim::mac
