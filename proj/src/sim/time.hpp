#pragma once

#include <cstdint>
#include <string>

namespace railsim {

// Simulation clock. Integer microseconds, no floating point anywhere in the
// timeline: equal inputs must give equal schedules on every platform.
struct SimTime {
  std::int64_t us = 0;

  constexpr bool operator==(const SimTime&) const = default;
  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime d) const { return {us + d.us}; }
  constexpr SimTime operator-(SimTime d) const { return {us - d.us}; }
  SimTime& operator+=(SimTime d) { us += d.us; return *this; }
};

constexpr SimTime usec(std::int64_t v) { return {v}; }
constexpr SimTime msec(std::int64_t v) { return {v * 1000}; }
constexpr SimTime sec(std::int64_t v) { return {v * 1000000}; }

inline std::string format_time(SimTime t) {
  return std::to_string(t.us) + "us";
}

}  // namespace railsim
