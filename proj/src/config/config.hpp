#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sim/time.hpp"
#include "workload/traffic.hpp"

namespace railsim::config {

enum class Scheme { BackoffQueue, Csma154, Bmac, Dcf };

const char* scheme_name(Scheme s);

struct PhyConfig {
  std::int64_t bitrate_bps = 250000;
  SimTime overhead{480};  // per-frame header airtime
};

struct BqMacConfig {
  SimTime backoff_slot{320};
  int slot_count = 15;
  SimTime beacon_interval{122880};
  SimTime beacon_time{960};
  int capacity = 4;  // queue length per time slot
  int miss_threshold = 3;
  bool reserved_safety_slot = false;
  bool safety_gateway = false;
};

struct CsmaConfig {
  SimTime backoff_slot{320};
  int be_min = 3;
  int be_max = 5;
  int max_backoffs = 4;
  int cca_slots = 2;
  SimTime beacon_interval{122880};
  SimTime beacon_time{960};
  int slot_count = 15;          // contention slots forming the active period
  SimTime slot_duration{960};   // length of one contention slot
};

struct DcfConfig {
  SimTime slot{20};
  int cw_min = 31;
  int cw_max = 1023;
  SimTime aifs{34};
  bool edca = true;
};

struct LplConfig {
  SimTime check_interval{100000};
  int backoff_slots = 32;       // initial backoff window
  int congestion_slots = 32;    // redraw window after a busy CCA
  SimTime backoff_slot{320};
};

struct GroupConfig {
  std::string name;
  int count = 1;
  int payload = 32;
  workload::TrafficKind kind = workload::TrafficKind::Periodic;
  SimTime period{0};
  SimTime period_min{0};
  SimTime period_max{0};
  std::int64_t rate_lo_bps = 0;
  std::int64_t rate_hi_bps = 0;
  workload::AccessClass access = workload::AccessClass::Streaming;
  bool scripted_join = false;  // node enters via [script], not at start
};

struct SegmentConfig {
  bool curved = false;
  double length_m = 0;
  double radius_m = 0;
};

struct TrackConfig {
  std::vector<SegmentConfig> segments;
  double tag_interval_m = 0;  // 0 = no tags
};

struct TrainConfig {
  double v0 = 0;       // m/s
  double accel = 0;    // m/s^2
  SimTime accel_until{0};
};

struct SensorConfig {
  std::string cls;  // tilt, wheel_defect, axle_defect, pantograph_video,
                    // position_reader, interior_humidity, interior_fire
  SimTime base_period{1000000};
  SimTime min_period{100000};
  double alpha = 0;
  double beta = 0;
  int payload = 32;
  bool dead = false;  // fails self-diagnosis, excluded from rosters
};

struct TopologyConfig {
  int vehicles = 1;
  std::vector<SensorConfig> sensors;  // one instance per vehicle each
  SimTime controller_period{100000};
  SimTime hop_latency{2000};
  double lookahead_m = 2000;
  double v_ref = 100;            // m/s, adaptation normalizer
  double speed_threshold = 55.6; // m/s, elevation trigger
  SimTime safety_service{1000};  // separate-gateway fixed service time
  bool diagnose = true;
};

struct ScriptOp {
  enum class Kind { Join, Dequeue, Kill };
  Kind kind = Kind::Join;
  int node = 0;  // 1-based global node id
  SimTime at{0};
};

enum class RosterOrder { Blocked, Interleaved };

struct ScenarioConfig {
  Scheme scheme = Scheme::BackoffQueue;
  std::string scenario = "scenario";
  std::uint64_t seed = 1;
  SimTime horizon{60000000};
  SimTime warmup{5000000};
  std::int64_t max_turns = 0;  // 0 = unlimited; caps protocol turns for walkthroughs
  int buffer_frames = 64;
  bool trace = false;
  RosterOrder roster = RosterOrder::Blocked;  // setup join order across groups
  PhyConfig phy;
  std::optional<BqMacConfig> mac;
  std::optional<CsmaConfig> csma;
  std::optional<DcfConfig> dcf;
  std::optional<LplConfig> lpl;
  std::vector<GroupConfig> groups;
  std::optional<TrackConfig> track;
  std::optional<TrainConfig> train;
  std::optional<TopologyConfig> topology;
  std::vector<ScriptOp> script;

  int total_nodes() const;
};

struct LoadResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> errors;  // each prefixed "line N: " where known
  bool ok() const { return errors.empty() && config.has_value(); }
};

// Parses and validates; collects every error instead of stopping at the first.
LoadResult load_config(const std::string& text);
LoadResult load_config_file(const std::string& path);

// Canonical text form: fixed section and key order, durations in us, rates in
// bps. load(serialize(c)) reproduces c bit for bit.
std::string serialize(const ScenarioConfig& c);

// value parsing helpers, exposed for tests
std::optional<std::int64_t> parse_duration_us(const std::string& s);
std::optional<std::int64_t> parse_rate_bps(const std::string& s);

}  // namespace railsim::config
