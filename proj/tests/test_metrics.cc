#include <doctest.h>

#include "workload/metrics.hpp"
#include "workload/traffic.hpp"

using namespace railsim;
using namespace railsim::workload;

namespace {

DelaySample sample(int node, const std::string& group, std::int64_t created,
                   std::int64_t fulfilled) {
  DelaySample s;
  s.node = node;
  s.group = group;
  s.created = usec(created);
  s.fulfilled = usec(fulfilled);
  s.queue_wait = usec(fulfilled - created);  // fold everything into one part
  return s;
}

}  // namespace

TEST_CASE("delay components must account for the whole delay") {
  Metrics m;
  m.count_created(1, "g");
  DelaySample s = sample(1, "g", 100, 150);
  s.queue_wait = usec(20);
  s.access = usec(20);
  s.tx = usec(9);  // 49 != 50
  CHECK_THROWS_AS(m.record_fulfilled(s), InvariantViolation);
  s.tx = usec(10);
  CHECK_NOTHROW(m.record_fulfilled(s));
}

TEST_CASE("conservation is exact per node") {
  Metrics m;
  for (int i = 0; i < 10; ++i) m.count_created(1, "g");
  m.record_fulfilled(sample(1, "g", 0, 5));
  m.count_dropped(1);
  m.set_residual(1, 8);
  CHECK_NOTHROW(m.check_conservation());
  m.set_residual(1, 7);
  CHECK_THROWS_AS(m.check_conservation(), InvariantViolation);
}

TEST_CASE("a node cannot emit more than it created") {
  Metrics m;
  m.count_created(1, "g");
  m.record_fulfilled(sample(1, "g", 0, 1));
  CHECK_THROWS_AS(m.count_dropped(1), InvariantViolation);
}

TEST_CASE("summary means use floor division and nearest-rank p95") {
  Metrics m;
  for (int i = 0; i < 3; ++i) m.count_created(1, "g");
  m.record_fulfilled(sample(1, "g", 0, 40000));
  m.record_fulfilled(sample(1, "g", 0, 60000));
  m.record_fulfilled(sample(1, "g", 0, 60001));
  ScenarioStats st = m.summarize(usec(0));
  REQUIRE(st.rows.size() == 2);  // g + overall
  CHECK(st.rows[0].group == "g");
  CHECK(st.rows[1].group == "overall");
  CHECK(st.rows[0].samples == 3);
  CHECK(st.rows[0].mean_delay_us == 53333);  // floor(160001/3)
  CHECK(st.rows[0].p95_delay_us == 60001);   // rank ceil(0.95*3)=3
}

TEST_CASE("warm-up filters samples by creation time but keeps drops") {
  Metrics m;
  for (int i = 0; i < 3; ++i) m.count_created(1, "g");
  m.record_fulfilled(sample(1, "g", 1000, 2000));       // before warmup
  m.record_fulfilled(sample(1, "g", 9000000, 9400000)); // after
  m.count_dropped(1);
  ScenarioStats st = m.summarize(usec(5000000));
  CHECK(st.rows[0].samples == 1);
  CHECK(st.rows[0].mean_delay_us == 400000);
  CHECK(st.rows[0].dropped == 1);
  CHECK(st.created == 3);
  CHECK(st.fulfilled == 2);
}

TEST_CASE("groups with zero samples report absent means") {
  Metrics m;
  m.count_created(1, "quiet");
  m.count_dropped(1);
  ScenarioStats st = m.summarize(usec(0));
  // the quiet group appears with its drop but no mean
  bool found = false;
  for (const auto& r : st.rows)
    if (r.group == "quiet") {
      found = true;
      CHECK(r.samples == 0);
      CHECK(r.mean_delay_us == -1);
      CHECK(r.dropped == 1);
    }
  CHECK(found);
  std::string csv = to_csv("s", "x", st, true);
  CHECK(csv.find("s,x,quiet,0,,,1\n") != std::string::npos);
  CHECK(csv.rfind("scheme,scenario,group,samples,mean_delay_us,p95_delay_us,"
                  "dropped\n", 0) == 0);
}

TEST_CASE("traffic sources derive fixed periods from rates") {
  TrafficSpec voip;
  voip.kind = TrafficKind::RateDriven;
  voip.payload_bytes = 160;
  voip.rate_lo_bps = voip.rate_hi_bps = 96000;
  TrafficSource src(voip, RngStream::derive(1, 1));
  CHECK(src.period() == usec(13333));  // 160*8 bits / 0.096 Mbit/s
  auto t1 = src.next_arrival(usec(0));
  REQUIRE(t1.has_value());
  CHECK(*t1 == usec(13333));

  TrafficSpec ranged;
  ranged.kind = TrafficKind::RateDriven;
  ranged.payload_bytes = 1500;
  ranged.rate_lo_bps = 500000;
  ranged.rate_hi_bps = 1000000;
  for (int i = 0; i < 50; ++i) {
    TrafficSource s(ranged, RngStream::derive(9, i));
    CHECK(s.drawn_rate_bps() >= 500000);
    CHECK(s.drawn_rate_bps() <= 1000000);
    CHECK(s.period().us == static_cast<std::int64_t>(
                               1500.0 * 8 * 1e6 / s.drawn_rate_bps() + 0.5));
  }
}

TEST_CASE("uniform random inter-arrivals cover the stated range") {
  TrafficSpec c;
  c.kind = TrafficKind::UniformRandom;
  c.period_min = usec(100000);
  c.period_max = usec(1000000);
  TrafficSource src(c, RngStream::derive(3, 3));
  std::int64_t lo = 1 << 30, hi = 0, sum = 0;
  const int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    auto t = src.next_arrival(usec(0));
    REQUIRE(t.has_value());
    lo = std::min(lo, t->us);
    hi = std::max(hi, t->us);
    sum += t->us;
  }
  CHECK(lo >= 100000);
  CHECK(hi <= 1000000);
  double mean = static_cast<double>(sum) / kDraws;
  CHECK(mean > 550000.0 * 0.98);
  CHECK(mean < 550000.0 * 1.02);
}

TEST_CASE("buffer overflow evicts the oldest frame") {
  FrameBuffer buf(3);
  for (int i = 0; i < 3; ++i) {
    Frame f;
    f.created = usec(i);
    CHECK_FALSE(buf.push(f).has_value());
  }
  Frame f;
  f.created = usec(99);
  auto dropped = buf.push(f);
  REQUIRE(dropped.has_value());
  CHECK(dropped->created == usec(0));
  CHECK(buf.size() == 3);
  CHECK(buf.front().created == usec(1));
}

TEST_CASE("silent sources never generate") {
  TrafficSpec s;
  s.kind = TrafficKind::Silent;
  TrafficSource src(s, RngStream::derive(1, 2));
  CHECK_FALSE(src.next_arrival(usec(0)).has_value());
}
