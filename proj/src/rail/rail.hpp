#pragma once

#include <string>
#include <vector>

#include "config/config.hpp"
#include "mac/mac_base.hpp"
#include "sim/kernel.hpp"
#include "sim/time.hpp"

namespace railsim::rail {

// Piecewise track laid out from position zero: straight and curved segments
// in order, with trackside tags every tag_interval meters when configured.
class TrackMap {
 public:
  explicit TrackMap(const config::TrackConfig& cfg)
      : tag_interval_(cfg.tag_interval_m) {
    double at = 0;
    for (const auto& s : cfg.segments) {
      if (s.length_m <= 0)
        throw InvariantViolation("track segment without length");
      segs_.push_back({s.curved, at, at + s.length_m, s.radius_m});
      at += s.length_m;
    }
    length_ = at;
  }

  double length() const { return length_; }

  // Does any curved stretch intersect the closed window [from_m, to_m]?
  // A curve beginning exactly at to_m already counts as in view.
  bool curve_within(double from_m, double to_m) const {
    for (const auto& s : segs_)
      if (s.curved && from_m < s.end && to_m >= s.begin) return true;
    return false;
  }

  // Index of the last tag passed, -1 before the first one or without tags.
  int tag_index(double pos_m) const {
    if (tag_interval_ <= 0 || pos_m < 0) return -1;
    return static_cast<int>(pos_m / tag_interval_);
  }

 private:
  struct Seg {
    bool curved;
    double begin, end;
    double radius;
  };
  std::vector<Seg> segs_;
  double tag_interval_;
  double length_ = 0;
};

// Closed-form motion: constant acceleration until accel_until, constant
// speed after that, never advancing past the end of the track.
class TrainMotion {
 public:
  TrainMotion(const config::TrainConfig& cfg, double track_len)
      : v0_(cfg.v0), a_(cfg.accel), ta_(cfg.accel_until), len_(track_len) {}

  double speed_at(SimTime t) const {
    double s = t < ta_ ? seconds(t) : seconds(ta_);
    return v0_ + a_ * s;
  }

  double position_at(SimTime t) const {
    double s = seconds(t);
    double cut = seconds(ta_);
    double x;
    if (s <= cut) {
      x = v0_ * s + 0.5 * a_ * s * s;
    } else {
      double x_cut = v0_ * cut + 0.5 * a_ * cut * cut;
      x = x_cut + (v0_ + a_ * cut) * (s - cut);
    }
    return x < len_ ? x : len_;
  }

 private:
  static double seconds(SimTime t) {
    return static_cast<double>(t.us) / 1e6;
  }
  double v0_, a_;
  SimTime ta_;
  double len_;
};

// Sampling period shrunk by speed and upcoming curvature, never faster than
// the sensor's floor and never slower than its base rate.
inline SimTime adapted_period(const config::SensorConfig& s, double speed,
                              bool curve, double v_ref) {
  double denom =
      1.0 + s.alpha * (speed / v_ref) + (curve ? s.beta : 0.0);
  auto us = static_cast<std::int64_t>(
      static_cast<double>(s.base_period.us) / denom);
  if (us < s.min_period.us) us = s.min_period.us;
  if (us > s.base_period.us) us = s.base_period.us;
  return SimTime{us};
}

// Service tier a sensor should ride at in the current situation.
inline mac::QosTier priority_tier(const std::string& cls, double speed,
                                  bool curve, double speed_threshold) {
  if (cls == "tilt" && curve) return mac::QosTier::SafetyCritical;
  if ((cls == "wheel_defect" || cls == "axle_defect" ||
       cls == "pantograph_video") &&
      speed > speed_threshold)
    return mac::QosTier::Elevated;
  return mac::QosTier::Regular;
}

}  // namespace railsim::rail
