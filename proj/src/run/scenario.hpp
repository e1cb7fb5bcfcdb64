#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config/config.hpp"
#include "sim/time.hpp"
#include "workload/metrics.hpp"

namespace railsim::run {

// Self-diagnosis outcome for one sensor, gathered before the main phase.
struct DiagRecord {
  int node = 0;
  int vehicle = 0;
  std::string cls;
  bool alive = true;
  SimTime rtt{0};  // diagnostic round trip, or the timeout spent on a dead one
};

struct RunResult {
  workload::ScenarioStats stats;
  std::vector<workload::DelaySample> samples;
  std::string protocol_trace;  // empty unless tracing was on
  std::string event_trace;
  std::uint64_t events = 0;
  SimTime ended_at{0};  // horizon, or earlier when the run stopped itself

  // situation-mode bookkeeping, untouched in plain benches
  std::vector<DiagRecord> diagnosis;
  std::int64_t alerts = 0;
  std::int64_t escalations = 0;
  std::int64_t demotions = 0;
  std::int64_t escalation_warnings = 0;
};

// Executes one scenario to completion. The config is assumed validated;
// protocol trouble surfaces as InvariantViolation.
RunResult run_scenario(const config::ScenarioConfig& cfg);

}  // namespace railsim::run
