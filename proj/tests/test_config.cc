#include <doctest.h>

#include <string>

#include "config/config.hpp"

using namespace railsim;
using namespace railsim::config;

static const char* kMinimal = R"(
scheme: backoff_queue
scenario: tiny

[mac]
capacity: 4

[group]
name: A
count: 1
kind: periodic
period: 100ms
)";

TEST_CASE("minimal config parses with defaults") {
  LoadResult r = load_config(kMinimal);
  REQUIRE(r.ok());
  const ScenarioConfig& c = *r.config;
  CHECK(c.scheme == Scheme::BackoffQueue);
  CHECK(c.scenario == "tiny");
  CHECK(c.seed == 1);
  CHECK(c.horizon == usec(60000000));
  CHECK(c.warmup == usec(5000000));
  CHECK(c.buffer_frames == 64);
  REQUIRE(c.mac.has_value());
  CHECK(c.mac->backoff_slot == usec(320));
  CHECK(c.mac->slot_count == 15);
  CHECK(c.mac->beacon_interval == usec(122880));
  CHECK(c.mac->miss_threshold == 3);
  CHECK(c.phy.bitrate_bps == 250000);
  REQUIRE(c.groups.size() == 1);
  CHECK(c.groups[0].period == usec(100000));
  CHECK(c.total_nodes() == 1);
}

TEST_CASE("duration and rate literals") {
  CHECK(parse_duration_us("320us") == 320);
  CHECK(parse_duration_us("122.88ms") == 122880);
  CHECK(parse_duration_us("5s") == 5000000);
  CHECK(parse_duration_us("0.25s") == 250000);
  CHECK(parse_duration_us("1.5ms") == 1500);
  CHECK_FALSE(parse_duration_us("0.5us").has_value());   // sub-tick
  CHECK_FALSE(parse_duration_us("1.0005ms").has_value());
  CHECK(parse_duration_us("1.000ms") == 1000);
  CHECK_FALSE(parse_duration_us("100").has_value());     // unit required
  CHECK_FALSE(parse_duration_us("abcms").has_value());

  CHECK(parse_rate_bps("250kbps") == 250000);
  CHECK(parse_rate_bps("0.096mbps") == 96000);
  CHECK(parse_rate_bps("650mbps") == 650000000);
  CHECK(parse_rate_bps("96000bps") == 96000);
  CHECK_FALSE(parse_rate_bps("0.0001kbps").has_value());
  CHECK_FALSE(parse_rate_bps("12").has_value());
}

TEST_CASE("all errors are collected with line numbers") {
  std::string text = R"(scheme: warp_drive
horizon: 3s
warmup: 10s
buffer_frames: 0

[mac]
capacity: nope

[group]
name: A
kind: periodic
period: 100ms

[group]
name: A
kind: rate
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  auto has = [&](const std::string& frag) {
    for (const auto& e : r.errors)
      if (e.find(frag) != std::string::npos) return true;
    return false;
  };
  CHECK(has("line 1"));              // bad scheme
  CHECK(has("warp_drive"));
  CHECK(has("'horizon'"));           // horizon <= warmup names both fields
  CHECK(has("'warmup'"));
  CHECK(has("buffer_frames"));
  CHECK(has("line 7"));              // capacity: nope
  CHECK(has("duplicate group name"));
  CHECK(has("rate kind requires"));
  CHECK(r.errors.size() >= 6);
}

TEST_CASE("scheme section must match the scheme tag") {
  std::string text = R"(scheme: dcf

[mac]
capacity: 4

[group]
name: g
count: 2
kind: rate
rate: 1mbps
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& e : r.errors)
    if (e.find("[dcf]") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("rate ranges parse with shared suffix") {
  std::string text = R"(scheme: dcf

[dcf]
cw_min: 31

[group]
name: video
count: 1
payload: 1500
kind: rate
rate: 0.5-1mbps
class: video
)";
  LoadResult r = load_config(text);
  REQUIRE(r.ok());
  CHECK(r.config->groups[0].rate_lo_bps == 500000);
  CHECK(r.config->groups[0].rate_hi_bps == 1000000);
  CHECK(r.config->groups[0].access == workload::AccessClass::Video);
}

TEST_CASE("canonical serialization is a fixpoint of load") {
  LoadResult first = load_config(kMinimal);
  REQUIRE(first.ok());
  std::string canon = serialize(*first.config);
  LoadResult second = load_config(canon);
  REQUIRE(second.ok());
  CHECK(serialize(*second.config) == canon);

  // a fuller config exercising every section
  std::string text = R"(
scheme: backoff_queue
scenario: situation
seed: 7
horizon: 40s
warmup: 1s

[mac]
capacity: 4
reserved_safety_slot: true

[track]
segment: straight 3000
segment: curved 2000 r600
segment: straight 5000
tag_interval: 500

[train]
v0: 20
accel: 1.5
accel_until: 40s

[topology]
vehicles: 2
sensor: tilt base=1s min=100ms alpha=0 beta=3
sensor: wheel_defect base=500ms min=50ms alpha=2 beta=0
sensor: interior_fire base=2s min=2s alpha=0 beta=0
controller_period: 100ms
lookahead: 2000
)";
  LoadResult r = load_config(text);
  REQUIRE(r.ok());
  std::string canon2 = serialize(*r.config);
  LoadResult r2 = load_config(canon2);
  REQUIRE(r2.ok());
  CHECK(serialize(*r2.config) == canon2);
  CHECK(r2.config->topology->sensors.size() == 3);
  CHECK(r2.config->topology->sensors[0].beta == 3.0);
  CHECK(r2.config->track->segments[1].curved);
  CHECK(r2.config->track->segments[1].radius_m == 600.0);
}

TEST_CASE("topology scenarios demand track and train") {
  std::string text = R"(
scheme: backoff_queue

[mac]
capacity: 4

[topology]
vehicles: 1
sensor: tilt base=1s min=100ms alpha=1 beta=3
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  bool track = false, train = false;
  for (const auto& e : r.errors) {
    if (e.find("[track]") != std::string::npos) track = true;
    if (e.find("[train]") != std::string::npos) train = true;
  }
  CHECK(track);
  CHECK(train);
}

TEST_CASE("interior sensors must stay constant-rate") {
  std::string text = R"(
scheme: backoff_queue

[mac]
capacity: 4

[track]
segment: straight 1000

[train]
v0: 10

[topology]
vehicles: 1
sensor: interior_fire base=2s min=1s alpha=1 beta=0
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& e : r.errors)
    if (e.find("alpha=0 beta=0") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("script references are validated") {
  std::string text = R"(
scheme: backoff_queue

[mac]
capacity: 4
slot_count: 1

[group]
name: walk
count: 4
kind: silent

[group]
name: late
count: 1
kind: silent
join: scripted

[script]
dequeue: 2 2.5ms
kill: 3 5ms
join: 5 10ms
join: 9 1ms
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  bool range = false, scripted_ok = true;
  for (const auto& e : r.errors) {
    if (e.find("node 9") != std::string::npos) range = true;
    if (e.find("node 5") != std::string::npos) scripted_ok = false;
  }
  CHECK(range);
  CHECK(scripted_ok);  // node 5 is in the scripted group, legal target
}

TEST_CASE("roster capacity is enforced") {
  std::string text = R"(
scheme: backoff_queue

[mac]
capacity: 4
slot_count: 15

[group]
name: big
count: 61
kind: periodic
period: 100ms
)";
  LoadResult r = load_config(text);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& e : r.errors)
    if (e.find("exceeds network capacity") != std::string::npos) found = true;
  CHECK(found);
}
