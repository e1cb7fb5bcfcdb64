#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mac/bq_mac.hpp"
#include "net/phy.hpp"
#include "sim/kernel.hpp"

using railsim::Engine;
using railsim::InvariantViolation;
using railsim::SimTime;
using railsim::mac::BqCluster;
using railsim::mac::NodeHost;
using railsim::mac::ProtocolTrace;
using railsim::mac::QosTier;

namespace {

struct StubHost : NodeHost {
  std::map<int, std::deque<int>> buf;  // node -> payload bytes per frame
  struct Served {
    int node;
    SimTime attempt, tx_start, tx_end;
  };
  std::vector<Served> served;

  bool node_has_data(int node) const override {
    auto it = buf.find(node);
    return it != buf.end() && !it->second.empty();
  }
  int head_payload(int node) const override { return buf.at(node).front(); }
  void begin_service(int node) override { buf.at(node).pop_front(); }
  void finish_service(int node, SimTime a, SimTime s, SimTime e) override {
    served.push_back({node, a, s, e});
  }
  void abort_service(int) override { FAIL("backoff queue never aborts"); }
};

railsim::config::BqMacConfig walkthrough_cfg() {
  railsim::config::BqMacConfig c;
  c.backoff_slot = SimTime{320};
  c.slot_count = 1;
  c.beacon_interval = SimTime{15360};
  c.beacon_time = SimTime{960};
  c.capacity = 4;
  c.miss_threshold = 3;
  return c;
}

railsim::net::Phy low_rate_phy() { return {250000, SimTime{480}}; }

std::string tl(long long tick, int slot, const char* kind, const char* tx,
               int p, const char* snap) {
  std::ostringstream os;
  os << tick << '\t' << slot << '\t' << kind << '\t' << tx << '\t' << p << '\t'
     << snap << '\n';
  return os.str();
}

}  // namespace

TEST_CASE("two saturated nodes alternate, every tick accounted for") {
  Engine eng;
  StubHost host;
  for (int n : {1, 2})
    for (int i = 0; i < 10; ++i) host.buf[n].push_back(32);
  ProtocolTrace trace;
  BqCluster mac(eng, host, walkthrough_cfg(), low_rate_phy(), &trace);
  mac.set_max_turns(4);
  CHECK(mac.request_join(1, QosTier::Regular, SimTime{0}) == 1);
  CHECK(mac.request_join(2, QosTier::Regular, SimTime{0}) == 1);
  mac.start(SimTime{0});
  eng.run_until(SimTime{100000});

  // 32 payload bytes take 480 + 1024 = 1504us on air; a turn at position p
  // adds p backoff slots of 320us in front of that.
  std::string want = tl(960, 1, "enqueue", "1", 0, "1:4") +
                     tl(2464, 1, "enqueue", "2", 0, "1:3,2:4") +
                     tl(3968, 1, "data", "1", 3, "2:3,1:4") +
                     tl(6432, 1, "data", "2", 3, "1:3,2:4");
  CHECK(trace.text() == want);
  CHECK(eng.now() == SimTime{6432});
  CHECK(mac.turns() == 4);

  REQUIRE(host.served.size() == 4);
  CHECK(host.served[0].node == 1);
  CHECK(host.served[0].attempt == SimTime{960});
  CHECK(host.served[0].tx_start == SimTime{960});  // enqueue sends at once
  CHECK(host.served[0].tx_end == SimTime{2464});
  CHECK(host.served[2].node == 1);
  CHECK(host.served[2].attempt == SimTime{3968});
  CHECK(host.served[2].tx_start == SimTime{4928});  // 3 slots of deference
  CHECK(host.served[2].tx_end == SimTime{6432});
}

TEST_CASE("voluntary leave: intent, sort broadcast, then idle") {
  Engine eng;
  StubHost host;  // all four nodes stay silent
  ProtocolTrace trace;
  BqCluster mac(eng, host, walkthrough_cfg(), low_rate_phy(), &trace);
  mac.set_max_turns(7);
  std::vector<std::pair<int, SimTime>> sorted;
  mac.set_on_sorted([&](int n, SimTime at) { sorted.emplace_back(n, at); });
  for (int n : {1, 2, 3, 4}) mac.request_join(n, QosTier::Regular, SimTime{0});
  eng.schedule(SimTime{2500}, "script", [&] { mac.request_dequeue(2); });
  mac.start(SimTime{0});
  eng.run_until(SimTime{100000});

  // empty-handed enqueues cost one control frame (480us) each
  std::string want = tl(960, 1, "enqueue", "1", 0, "1:4") +
                     tl(1440, 1, "enqueue", "2", 0, "1:3,2:4") +
                     tl(1920, 1, "enqueue", "3", 0, "1:2,2:3,3:4") +
                     tl(2400, 1, "enqueue", "4", 0, "1:1,2:2,3:3,4:4") +
                     tl(2880, 1, "dequeue_intent", "2", 2, "1:1,2:2,3:3,4:4") +
                     tl(4000, 1, "dequeue_sort", "-", 2, "1:2,3:3,4:4") +
                     tl(4480, 1, "idle", "-", 0, "1:2,3:3,4:4");
  CHECK(trace.text() == want);
  REQUIRE(sorted.size() == 1);
  CHECK(sorted[0].first == 2);
  CHECK(sorted[0].second == SimTime{4480});  // broadcast end
  CHECK_FALSE(mac.serves(2));
  CHECK(mac.serves(1));
  CHECK(host.served.empty());
}

TEST_CASE("dead node is probed out and swept away") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  auto cfg = walkthrough_cfg();
  cfg.miss_threshold = 1;
  BqCluster mac(eng, host, cfg, low_rate_phy(), &trace);
  for (int n : {1, 2, 3, 4}) mac.request_join(n, QosTier::Regular, SimTime{0});
  mac.set_max_turns(25);
  eng.schedule(SimTime{16000}, "script", [&] { mac.kill_node(2); });
  mac.start(SimTime{0});
  eng.run_until(SimTime{200000});

  // Cycle 1 admits everyone and idles out; the probe at the second beacon
  // reaches node 1 (alive), the one at the third reaches node 2 and misses,
  // so the third cycle runs the sweep.
  std::string text = trace.text();
  CHECK(text.find(tl(31680, 1, "collect_tx", "1", 1,
                     "2:1,3:2,4:3,1:4")) != std::string::npos);
  // counter 2 belongs to the dead node: silence for max_position + 1 slots
  CHECK(text.find(tl(32480, 1, "collect_idle", "-", 0,
                     "2:1,3:2,4:3,1:4")) != std::string::npos);
  CHECK(text.find(tl(34080, 1, "collect_tx", "3", 2,
                     "2:1,4:2,1:3,3:4")) != std::string::npos);
  // final sweep reply ends the collection and erases the phantom
  CHECK(text.find(tl(35200, 1, "collect_tx", "4", 2,
                     "1:2,3:3,4:4")) != std::string::npos);
  CHECK(text.find(tl(36320, 1, "idle", "-", 0, "1:2,3:3,4:4")) !=
        std::string::npos);
  CHECK(mac.turns() == 25);
  CHECK(mac.collection_turns() == 4);
  CHECK_FALSE(mac.serves(2));
  CHECK(mac.serves(1));
  CHECK(mac.serves(3));
  CHECK(mac.serves(4));
}

TEST_CASE("sweep reply piggybacks buffered data") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  auto cfg = walkthrough_cfg();
  cfg.miss_threshold = 1;
  BqCluster mac(eng, host, cfg, low_rate_phy(), &trace);
  for (int n : {1, 2, 3, 4}) mac.request_join(n, QosTier::Regular, SimTime{0});
  mac.set_max_turns(24);
  eng.schedule(SimTime{16000}, "script", [&] { mac.kill_node(2); });
  // frame shows up after the second cycle went fully idle
  eng.schedule(SimTime{30000}, "script", [&] { host.buf[3].push_back(32); });
  mac.start(SimTime{0});
  eng.run_until(SimTime{200000});

  std::string text = trace.text();
  CHECK(text.find(tl(34080, 1, "collect_tx", "3", 2,
                     "2:1,4:2,1:3,3:4")) != std::string::npos);
  CHECK(text.find(tl(36224, 1, "collect_tx", "4", 2,
                     "1:2,3:3,4:4")) != std::string::npos);
  REQUIRE(host.served.size() == 1);
  CHECK(host.served[0].node == 3);
  CHECK(host.served[0].attempt == SimTime{34080});
  CHECK(host.served[0].tx_start == SimTime{34720});
  CHECK(host.served[0].tx_end == SimTime{36224});
}

TEST_CASE("turn that overruns the window waits for the next cycle") {
  Engine eng;
  StubHost host;
  for (int i = 0; i < 4; ++i) host.buf[1].push_back(32);
  ProtocolTrace trace;
  railsim::config::BqMacConfig cfg;
  cfg.backoff_slot = SimTime{320};
  cfg.slot_count = 2;
  cfg.beacon_time = SimTime{960};
  cfg.beacon_interval = SimTime{4960};  // two 2000us windows
  cfg.capacity = 1;
  BqCluster mac(eng, host, cfg, low_rate_phy(), &trace);
  mac.set_max_turns(3);
  mac.request_join(1, QosTier::Regular, SimTime{0});
  mac.start(SimTime{0});
  eng.run_until(SimTime{100000});

  // enqueue (1504us) fits cycle 1; the follow-up data turn at position 1
  // needs 1824us, more than the 496us left, so it lands at the start of the
  // slot's window in cycle 2.
  std::string want = tl(960, 1, "enqueue", "1", 0, "1:1") +
                     tl(5920, 1, "data", "1", 1, "1:1") +
                     tl(10880, 1, "data", "1", 1, "1:1");
  CHECK(trace.text() == want);
}

TEST_CASE("turn longer than a whole window is a configuration fault") {
  Engine eng;
  StubHost host;
  for (int i = 0; i < 4; ++i) host.buf[1].push_back(32);
  railsim::config::BqMacConfig cfg;
  cfg.backoff_slot = SimTime{320};
  cfg.slot_count = 2;
  cfg.beacon_time = SimTime{960};
  cfg.beacon_interval = SimTime{4960};
  cfg.capacity = 4;  // position-4 data turn needs 2784us > 2000us window
  BqCluster mac(eng, host, cfg, low_rate_phy(), nullptr);
  mac.request_join(1, QosTier::Regular, SimTime{0});
  mac.start(SimTime{0});
  CHECK_THROWS_AS(eng.run_until(SimTime{100000}), InvariantViolation);
}

TEST_CASE("dormant slots stay silent") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  railsim::config::BqMacConfig cfg;  // defaults: 15 slots
  BqCluster mac(eng, host, cfg, low_rate_phy(), &trace);
  mac.request_join(7, QosTier::Regular, SimTime{0});
  mac.start(SimTime{0});
  eng.run_until(SimTime{4 * 122880});

  std::istringstream lines(trace.text());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    auto a = line.find('\t');
    auto b = line.find('\t', a + 1);
    CHECK(line.substr(a + 1, b - a - 1) == "1");
  }
  CHECK(count > 0);
  auto util = mac.slot_utilization();
  REQUIRE(util.size() == 15);
  CHECK(util[0] > 0.0);
  for (int i = 1; i < 15; ++i) CHECK(util[i] == 0.0);
}

TEST_CASE("join requests wait for their gate time") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  BqCluster mac(eng, host, walkthrough_cfg(), low_rate_phy(), &trace);
  mac.request_join(1, QosTier::Regular, SimTime{0});
  mac.request_join(2, QosTier::Regular, SimTime{20000});
  mac.start(SimTime{0});
  eng.run_until(SimTime{25000});

  // cycle 2 idles at 16320, 17920, 19520 (all before the gate), then admits
  std::string text = trace.text();
  CHECK(text.find(tl(19520, 1, "idle", "-", 0, "1:4")) != std::string::npos);
  CHECK(text.find(tl(21120, 1, "enqueue", "2", 0, "1:3,2:4")) !=
        std::string::npos);
}

TEST_CASE("slots fill first-fit within a tier, safety claims the reserve") {
  Engine eng;
  StubHost host;
  railsim::config::BqMacConfig cfg;
  cfg.slot_count = 3;
  cfg.capacity = 2;
  cfg.reserved_safety_slot = true;
  BqCluster mac(eng, host, cfg, low_rate_phy(), nullptr);
  CHECK(mac.reserved_slot() == 3);
  CHECK(mac.request_join(10, QosTier::Regular, SimTime{0}) == 1);
  CHECK(mac.request_join(11, QosTier::Regular, SimTime{0}) == 1);
  CHECK(mac.request_join(12, QosTier::Regular, SimTime{0}) == 2);
  CHECK(mac.request_join(13, QosTier::SafetyCritical, SimTime{0}) == 3);
  CHECK(mac.request_join(14, QosTier::Regular, SimTime{0}) == 2);
  CHECK(mac.request_join(15, QosTier::SafetyCritical, SimTime{0}) == 3);
  // reserve is full and regular slots never take safety traffic
  CHECK(mac.request_join(16, QosTier::SafetyCritical, SimTime{0}) == 0);
  // no elevated slot exists and nothing is free to claim
  CHECK(mac.request_join(17, QosTier::Elevated, SimTime{0}) == 0);
  CHECK(mac.request_join(18, QosTier::Regular, SimTime{0}) == 0);
  CHECK(mac.slot_has_room(3, QosTier::SafetyCritical) == false);
  CHECK(mac.slot_has_room(2, QosTier::Regular) == false);
  CHECK(mac.slot_of(12) == 2);
  // withdrawing a pending join frees its seat again
  mac.request_dequeue(14);
  CHECK(mac.slot_has_room(2, QosTier::Regular));
  CHECK(mac.request_join(18, QosTier::Regular, SimTime{0}) == 2);
}

TEST_CASE("miss threshold counts consecutive failed probes") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  auto cfg = walkthrough_cfg();
  cfg.miss_threshold = 3;
  BqCluster mac(eng, host, cfg, low_rate_phy(), &trace);
  mac.request_join(1, QosTier::Regular, SimTime{0});
  eng.schedule(SimTime{2000}, "script", [&] { mac.kill_node(1); });
  mac.start(SimTime{0});
  eng.run_until(SimTime{8 * 15360});

  // sole member, probed at every beacon from the second on; the third miss
  // lands at the fourth beacon (t = 46080) and that cycle sweeps
  std::string text = trace.text();
  CHECK(text.find(tl(47040, 1, "collect_idle", "-", 0, "1:4")) !=
        std::string::npos);
  CHECK(mac.collection_turns() == 4);
  CHECK_FALSE(mac.serves(1));
  // nobody heard during the sweep: the slot empties and goes dormant, so the
  // last sweep turn is also the last trace line of the whole run
  std::string last = tl(51840, 1, "collect_idle", "-", 0, "-");
  REQUIRE(text.size() >= last.size());
  CHECK(text.substr(text.size() - last.size()) == last);
}

TEST_CASE("a node can leave and rejoin through the admission path") {
  Engine eng;
  StubHost host;
  ProtocolTrace trace;
  BqCluster mac(eng, host, walkthrough_cfg(), low_rate_phy(), &trace);
  for (int n : {1, 2}) mac.request_join(n, QosTier::Regular, SimTime{0});
  mac.set_on_sorted([&](int n, SimTime at) {
    CHECK(n == 2);
    mac.request_join(2, QosTier::Regular, at);
  });
  eng.schedule(SimTime{2500}, "script", [&] { mac.request_dequeue(2); });
  mac.start(SimTime{0});
  eng.run_until(SimTime{10000});

  // two silent members idle once (1920, 1600us) before the leave request
  // lands, so the intent runs at 3520 over node 2's position 4
  std::string text = trace.text();
  CHECK(text.find(tl(1440, 1, "enqueue", "2", 0, "1:3,2:4")) !=
        std::string::npos);
  CHECK(text.find(tl(3520, 1, "dequeue_intent", "2", 4, "1:3,2:4")) !=
        std::string::npos);
  CHECK(text.find(tl(5280, 1, "dequeue_sort", "-", 4, "1:4")) !=
        std::string::npos);
  // re-admission enqueue in the very next turn
  CHECK(text.find(tl(5760, 1, "enqueue", "2", 0, "1:3,2:4")) !=
        std::string::npos);
  CHECK(mac.serves(2));
  CHECK(mac.slot_of(2) == 1);
}
