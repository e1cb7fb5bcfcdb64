#include <doctest.h>

#include <algorithm>
#include <vector>

#include "sim/kernel.hpp"
#include "sim/rng.hpp"
#include "sim/time.hpp"

using railsim::Engine;
using railsim::EventHandle;
using railsim::InvariantViolation;
using railsim::RngStream;
using railsim::SimTime;
using railsim::usec;

TEST_CASE("time arithmetic and formatting") {
  CHECK(railsim::msec(3) == usec(3000));
  CHECK(railsim::sec(2) == railsim::msec(2000));
  CHECK(usec(5) + usec(7) == usec(12));
  CHECK(usec(7) - usec(5) == usec(2));
  CHECK(usec(5) < usec(7));
  CHECK(railsim::format_time(usec(122880)) == "122880us");
}

TEST_CASE("events fire in (time, insertion) order") {
  // oracle: stable sort of the surviving schedule requests
  RngStream rng = RngStream::derive(0xfeedu, 1);
  for (int round = 0; round < 50; ++round) {
    Engine eng;
    struct Req {
      std::int64_t at;
      EventHandle h;
      bool cancelled = false;
    };
    std::vector<Req> reqs;
    for (int i = 0; i < 2000; ++i) {
      std::int64_t at = static_cast<std::int64_t>(rng.below(500));
      Req r;
      r.at = at;
      r.h = eng.schedule(usec(at), "ev", [] {});
      reqs.push_back(r);
    }
    // fire order observed through the trace sink, keyed by sequence number
    std::vector<EventHandle> order;
    eng.set_trace_sink([&order](SimTime, std::uint64_t seq, const char*) {
      order.push_back(seq);
    });
    for (Req& r : reqs)
      if (rng.below(3) == 0) {
        CHECK(eng.cancel(r.h));
        r.cancelled = true;
      }
    eng.run_until(usec(1000));

    std::vector<Req> alive;
    for (const Req& r : reqs)
      if (!r.cancelled) alive.push_back(r);
    std::stable_sort(alive.begin(), alive.end(),
                     [](const Req& a, const Req& b) { return a.at < b.at; });
    REQUIRE(order.size() == alive.size());
    for (std::size_t i = 0; i < alive.size(); ++i)
      CHECK(order[i] == alive[i].h);
  }
}

TEST_CASE("callbacks may schedule further work at the current instant") {
  Engine eng;
  std::vector<int> log;
  eng.schedule(usec(10), "a", [&] {
    log.push_back(1);
    eng.schedule(usec(10), "b", [&] { log.push_back(2); });
    eng.schedule_in(usec(0), "c", [&] { log.push_back(3); });
  });
  eng.schedule(usec(10), "d", [&] { log.push_back(4); });
  eng.run_until(usec(20));
  // same-instant events run in insertion order, including nested ones
  CHECK(log == std::vector<int>{1, 4, 2, 3});
}

TEST_CASE("split horizon replay matches a single run") {
  auto script = [](Engine& engine, std::vector<std::int64_t>& log) {
    Engine* e = &engine;
    std::vector<std::int64_t>* lg = &log;
    for (int i = 0; i < 200; ++i) {
      std::int64_t at = (i * 37) % 400;
      e->schedule(usec(at), "t", [lg, e] {
        lg->push_back(e->now().us);
        if (e->now().us < 350)
          e->schedule_in(usec(13), "chain",
                         [lg, e] { lg->push_back(-e->now().us); });
      });
    }
  };
  std::vector<std::int64_t> one, two;
  {
    Engine eng;
    script(eng, one);
    eng.run_until(usec(1000));
  }
  {
    Engine eng;
    script(eng, two);
    eng.run_until(usec(200));
    eng.run_until(usec(1000));
  }
  CHECK(one == two);
}

TEST_CASE("cancel semantics") {
  Engine eng;
  int hits = 0;
  EventHandle h = eng.schedule(usec(5), "x", [&] { ++hits; });
  CHECK(eng.cancel(h));
  CHECK_FALSE(eng.cancel(h));      // second cancel is a no-op
  CHECK_FALSE(eng.cancel(99999));  // unknown handle
  EventHandle h2 = eng.schedule(usec(6), "y", [&] { ++hits; });
  eng.run_until(usec(10));
  CHECK(hits == 1);
  CHECK_FALSE(eng.cancel(h2));  // already fired
}

TEST_CASE("scheduling into the past is rejected") {
  Engine eng;
  eng.schedule(usec(50), "x", [] {});
  eng.run_until(usec(100));
  CHECK(eng.now() == usec(100));
  CHECK_THROWS_AS(eng.schedule(usec(99), "late", [] {}), InvariantViolation);
  CHECK_NOTHROW(eng.schedule(usec(100), "now", [] {}));
}

TEST_CASE("stop halts dispatch and preserves the queue") {
  Engine eng;
  std::vector<int> log;
  eng.schedule(usec(1), "a", [&] { log.push_back(1); });
  eng.schedule(usec(2), "b", [&] {
    log.push_back(2);
    eng.stop();
  });
  eng.schedule(usec(3), "c", [&] { log.push_back(3); });
  eng.run_until(usec(10));
  CHECK(log == std::vector<int>{1, 2});
  CHECK(eng.pending_count() == 1);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a = RngStream::derive(42, 7);
  RngStream b = RngStream::derive(42, 7);
  RngStream c = RngStream::derive(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    auto x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
    all_equal = all_equal && (x == y);
    any_diff = any_diff || (x != z);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("bounded draws stay in range and cover the range") {
  RngStream r = RngStream::derive(9, 1);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) {
    auto v = r.below(10);
    REQUIRE(v < 10);
    ++counts[static_cast<int>(v)];
  }
  for (int n : counts) CHECK(n > 9000);  // each bucket near 10000
  for (int i = 0; i < 1000; ++i) {
    auto v = r.range(5, 9);
    CHECK(v >= 5);
    CHECK(v <= 9);
    double d = r.real01();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}
