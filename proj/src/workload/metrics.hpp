#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sim/kernel.hpp"
#include "sim/time.hpp"

namespace railsim::workload {

struct DelaySample {
  int node = -1;
  std::string group;
  SimTime created{0};
  SimTime fulfilled{0};
  // decomposition: time in the node buffer, time contending for the channel,
  // time on air; the three must sum to fulfilled - created
  SimTime queue_wait{0};
  SimTime access{0};
  SimTime tx{0};
};

struct StatRow {
  std::string group;   // per-group rows plus one "overall" row
  std::int64_t samples = 0;
  std::int64_t mean_delay_us = -1;  // -1 when no samples
  std::int64_t p95_delay_us = -1;
  std::int64_t dropped = 0;
};

struct NodeTotals {
  int node = -1;
  std::int64_t created = 0;
  std::int64_t fulfilled = 0;
  std::int64_t dropped = 0;
  std::int64_t residual = 0;
};

struct ScenarioStats {
  std::vector<StatRow> rows;
  std::vector<NodeTotals> per_node;  // ascending node id
  std::int64_t created = 0;
  std::int64_t fulfilled = 0;
  std::int64_t dropped = 0;
  std::int64_t residual = 0;
  std::int64_t collection_turns = 0;
  std::vector<double> slot_utilization;  // airtime fraction per time slot
};

class Metrics {
 public:
  void count_created(int node, const std::string& group) {
    per_node_[node].created++;
    group_of_.emplace(node, group);
  }

  void count_dropped(int node) {
    auto& n = per_node_[node];
    n.dropped++;
    if (n.dropped + n.fulfilled > n.created)
      throw InvariantViolation("more frames left a node than entered it");
  }

  void record_fulfilled(const DelaySample& s) {
    if (s.fulfilled < s.created)
      throw InvariantViolation("fulfillment precedes creation");
    if (s.queue_wait.us < 0 || s.access.us < 0 || s.tx.us < 0)
      throw InvariantViolation("negative delay component");
    if (s.queue_wait + s.access + s.tx != s.fulfilled - s.created)
      throw InvariantViolation("delay components do not sum to the delay");
    auto& n = per_node_[s.node];
    n.fulfilled++;
    if (n.dropped + n.fulfilled > n.created)
      throw InvariantViolation("more frames left a node than entered it");
    samples_.push_back(s);
  }

  // residual = frames still buffered at scenario end, reported per node
  void set_residual(int node, std::int64_t count) {
    per_node_[node].residual = count;
  }

  // exact accounting, checked per node and globally
  void check_conservation() const {
    for (const auto& [node, c] : per_node_) {
      if (c.created != c.fulfilled + c.dropped + c.residual) {
        throw InvariantViolation(
            "frame conservation broken at node " + std::to_string(node) +
            ": created " + std::to_string(c.created) + " != fulfilled " +
            std::to_string(c.fulfilled) + " + dropped " +
            std::to_string(c.dropped) + " + residual " +
            std::to_string(c.residual));
      }
    }
  }

  ScenarioStats summarize(SimTime warmup) const {
    check_conservation();
    ScenarioStats out;
    std::map<std::string, std::vector<std::int64_t>> delays;
    for (const DelaySample& s : samples_) {
      if (s.created < warmup) continue;  // startup transient excluded
      std::int64_t d = (s.fulfilled - s.created).us;
      delays[s.group].push_back(d);
      delays["overall"].push_back(d);
    }
    std::map<std::string, std::int64_t> drops;
    for (const auto& [node, c] : per_node_) {
      auto it = group_of_.find(node);
      const std::string g = it == group_of_.end() ? "?" : it->second;
      drops[g] += c.dropped;
      drops["overall"] += c.dropped;
      out.per_node.push_back({node, c.created, c.fulfilled, c.dropped,
                              c.residual});
      out.created += c.created;
      out.fulfilled += c.fulfilled;
      out.dropped += c.dropped;
      out.residual += c.residual;
    }
    std::vector<std::string> groups;
    for (const auto& [g, _] : delays) groups.push_back(g);
    for (const auto& [g, _] : drops)
      if (!delays.count(g)) groups.push_back(g);
    if (delays.empty() && drops.empty()) groups.push_back("overall");
    std::sort(groups.begin(), groups.end());
    // overall row last
    std::stable_partition(groups.begin(), groups.end(),
                          [](const std::string& g) { return g != "overall"; });
    for (const std::string& g : groups) {
      StatRow row;
      row.group = g;
      row.dropped = drops.count(g) ? drops[g] : 0;
      auto it = delays.find(g);
      if (it != delays.end() && !it->second.empty()) {
        std::vector<std::int64_t> v = it->second;
        std::sort(v.begin(), v.end());
        std::int64_t sum = 0;
        for (std::int64_t d : v) sum += d;
        row.samples = static_cast<std::int64_t>(v.size());
        row.mean_delay_us = sum / row.samples;  // floor division, documented
        std::size_t idx = (v.size() * 95 + 99) / 100;  // ceil(0.95 n)
        row.p95_delay_us = v[idx - 1];
      }
      out.rows.push_back(row);
    }
    return out;
  }

  const std::vector<DelaySample>& samples() const { return samples_; }
  std::int64_t created_total() const {
    std::int64_t t = 0;
    for (const auto& [_, c] : per_node_) t += c.created;
    return t;
  }

 private:
  struct NodeCounts {
    std::int64_t created = 0;
    std::int64_t fulfilled = 0;
    std::int64_t dropped = 0;
    std::int64_t residual = 0;
  };
  std::map<int, NodeCounts> per_node_;
  std::map<int, std::string> group_of_;
  std::vector<DelaySample> samples_;
};

// CSV block for one scenario: header plus one row per stat group.
std::string to_csv(const std::string& scheme, const std::string& scenario,
                   const ScenarioStats& stats, bool with_header);

}  // namespace railsim::workload
