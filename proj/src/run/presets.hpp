#pragma once

#include <string>
#include <vector>

#include "config/config.hpp"

namespace railsim::run {

// Canned experiment suites. Each id expands to a fixed matrix of scenario
// configs (schemes x workloads x seeds) in a deterministic order.
std::vector<std::string> preset_ids();
bool is_preset(const std::string& id);

// Throws std::invalid_argument on an unknown id.
std::vector<config::ScenarioConfig> build_preset(const std::string& id);

// The matrix point serialized as presets/<id>.cfg in the repository; by
// convention the first point of the matrix.
config::ScenarioConfig preset_reference(const std::string& id);

// Runs the whole matrix and writes results.csv, summary.txt and, where the
// suite calls for them, plot data and protocol traces into out_dir.
void run_preset(const std::string& id, const std::string& out_dir);

}  // namespace railsim::run
