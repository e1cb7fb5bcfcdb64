#include "mac/baselines.hpp"

namespace railsim::mac {

// ---------------------------------------------------------------- CsmaMac

void CsmaMac::add_node(int node, RngStream rng) {
  Node n;
  n.rng = rng;
  nodes_.emplace(node, std::move(n));
}

void CsmaMac::start(SimTime first_beacon) {
  first_beacon_ = first_beacon;
  started_ = true;
  if (cap_length() < SimTime{cfg_.cca_slots * cfg_.backoff_slot.us})
    throw InvariantViolation("contention period shorter than one assessment");
}

SimTime CsmaMac::next_boundary(SimTime t) const {
  std::int64_t f = frame_index(t);
  SimTime cs = cap_start_of(f);
  SimTime ce = cs + cap_length();
  if (t <= cs) return cs;
  if (t >= ce) return cap_start_of(f + 1);
  std::int64_t step = cfg_.backoff_slot.us;
  std::int64_t off = ((t - cs).us + step - 1) / step * step;
  SimTime b = cs + SimTime{off};
  return b == ce ? cap_start_of(f + 1) : b;
}

SimTime CsmaMac::after_periods(SimTime t, int periods) const {
  SimTime b = next_boundary(t);
  while (periods > 0) {
    SimTime ce = cap_start_of(frame_index(b)) + cap_length();
    int avail = static_cast<int>((ce - b).us / cfg_.backoff_slot.us);
    int take = periods < avail ? periods : avail;
    b = b + SimTime{static_cast<std::int64_t>(take) * cfg_.backoff_slot.us};
    periods -= take;
    if (periods > 0) b = cap_start_of(frame_index(b) + 1);
  }
  return b;
}

void CsmaMac::frame_ready(int node) {
  if (!started_) throw InvariantViolation("frame before the first beacon");
  Node& n = nodes_.at(node);
  if (n.busy) return;
  begin_attempt(node);
}

void CsmaMac::begin_attempt(int node) {
  Node& n = nodes_.at(node);
  n.busy = true;
  n.nb = 0;
  n.be = cfg_.be_min;
  n.periods = 0;
  n.attempt = eng_.now();
  n.payload = host_.head_payload(node);
  host_.begin_service(node);
  draw_and_arm(node);
}

void CsmaMac::draw_and_arm(int node) {
  Node& n = nodes_.at(node);
  int k = static_cast<int>(n.rng.below(1ull << n.be));
  n.periods += k;
  SimTime b = after_periods(eng_.now(), k);
  SimTime cca = SimTime{cfg_.cca_slots * cfg_.backoff_slot.us};
  SimTime txd = phy_.tx_time(n.payload);
  SimTime ce = cap_start_of(frame_index(b)) + cap_length();
  if (b + cca + txd > ce) {
    // not enough active period left: resume at the front of the next one
    b = cap_start_of(frame_index(b) + 1);
    ce = b + cap_length();
    if (b + cca + txd > ce)
      throw InvariantViolation("frame does not fit the contention period");
  }
  eng_.schedule(b + cca, "csma_cca", [this, node, b] { cca_done(node, b); });
}

void CsmaMac::cca_done(int node, SimTime boundary) {
  Node& n = nodes_.at(node);
  SimTime cca_end = eng_.now();
  if (ch_.busy_between(boundary, cca_end)) {
    fail_step(node);
    return;
  }
  SimTime s = cca_end;
  SimTime e = s + phy_.tx_time(n.payload);
  ch_.begin(node, e,
            [this, node, s, e](bool col) { tx_done(node, s, e, col); });
}

void CsmaMac::tx_done(int node, SimTime s, SimTime e, bool collided) {
  Node& n = nodes_.at(node);
  if (collided) {
    if (trace_) trace_->line(s, 0, "csma_collision", node, n.periods, "-");
    fail_step(node);
    return;
  }
  if (trace_) trace_->line(s, 0, "csma_tx", node, n.periods, "-");
  host_.finish_service(node, n.attempt, s, e);
  n.busy = false;
  if (host_.node_has_data(node)) begin_attempt(node);
}

void CsmaMac::fail_step(int node) {
  Node& n = nodes_.at(node);
  n.nb++;
  n.be = n.be + 1 > cfg_.be_max ? cfg_.be_max : n.be + 1;
  if (n.nb > cfg_.max_backoffs) {
    if (trace_) trace_->line(eng_.now(), 0, "csma_drop", node, n.periods, "-");
    host_.abort_service(node);
    n.busy = false;
    if (host_.node_has_data(node)) begin_attempt(node);
    return;
  }
  draw_and_arm(node);
}

// ----------------------------------------------------------------- LplMac

void LplMac::add_node(int node, RngStream rng) {
  Node n;
  n.rng = rng;
  nodes_.emplace(node, std::move(n));
}

void LplMac::frame_ready(int node) {
  Node& n = nodes_.at(node);
  if (n.busy) return;
  begin_attempt(node);
}

void LplMac::begin_attempt(int node) {
  Node& n = nodes_.at(node);
  n.busy = true;
  n.periods = 0;
  n.attempt = eng_.now();
  n.payload = host_.head_payload(node);
  host_.begin_service(node);
  arm_sample(node, static_cast<int>(n.rng.range(1, cfg_.backoff_slots)));
}

void LplMac::arm_sample(int node, int slots) {
  Node& n = nodes_.at(node);
  n.periods += slots;
  SimTime s0 = eng_.now() +
               SimTime{static_cast<std::int64_t>(slots) * cfg_.backoff_slot.us};
  eng_.schedule(s0 + cfg_.backoff_slot, "lpl_cca",
                [this, node, s0] { sample(node, s0); });
}

void LplMac::sample(int node, SimTime s0) {
  Node& n = nodes_.at(node);
  if (ch_.busy_between(s0, eng_.now())) {
    // medium taken: congestion backoff, then listen again
    arm_sample(node, static_cast<int>(n.rng.range(1, cfg_.congestion_slots)));
    return;
  }
  SimTime s = eng_.now();
  SimTime e = s + cfg_.check_interval + phy_.tx_time(n.payload);
  ch_.begin(node, e,
            [this, node, s, e](bool col) { tx_done(node, s, e, col); });
}

void LplMac::tx_done(int node, SimTime s, SimTime e, bool collided) {
  Node& n = nodes_.at(node);
  if (collided) {
    if (trace_) trace_->line(s, 0, "lpl_collision", node, n.periods, "-");
    arm_sample(node, static_cast<int>(n.rng.range(1, cfg_.congestion_slots)));
    return;
  }
  if (trace_) trace_->line(s, 0, "lpl_tx", node, n.periods, "-");
  host_.finish_service(node, n.attempt, s, e);
  n.busy = false;
  if (host_.node_has_data(node)) begin_attempt(node);
}

// ----------------------------------------------------------------- DcfMac

std::pair<int, int> edca_bounds(AccessClass cls, int cw_min, int cw_max) {
  switch (cls) {
    case AccessClass::Voip:
      return {(cw_min + 1) / 4 - 1, (cw_max + 1) / 4 - 1};
    case AccessClass::Video:
      return {(cw_min + 1) / 2 - 1, (cw_max + 1) / 2 - 1};
    default:
      return {cw_min, cw_max};
  }
}

void DcfMac::add_node(int node, RngStream rng, AccessClass cls) {
  Node n;
  n.rng = rng;
  auto [lo, hi] =
      cfg_.edca ? edca_bounds(cls, cfg_.cw_min, cfg_.cw_max)
                : std::pair<int, int>{cfg_.cw_min, cfg_.cw_max};
  n.cw_min = lo;
  n.cw_max = hi;
  n.cw = lo;
  nodes_.emplace(node, std::move(n));
}

void DcfMac::frame_ready(int node) {
  Node& n = nodes_.at(node);
  if (n.busy) return;
  begin_attempt(node);
}

void DcfMac::begin_attempt(int node) {
  Node& n = nodes_.at(node);
  n.busy = true;
  n.cw = n.cw_min;
  n.periods = 0;
  n.attempt = eng_.now();
  n.payload = host_.head_payload(node);
  host_.begin_service(node);
  n.k = static_cast<int>(n.rng.below(n.cw + 1));
  n.periods += n.k;
  if (ch_.active_count() == 0) arm(node, eng_.now());
  // otherwise the next idle transition picks the node up
}

void DcfMac::arm(int node, SimTime base) {
  Node& n = nodes_.at(node);
  n.base = base;
  n.armed = true;
  SimTime at = base + cfg_.aifs +
               SimTime{static_cast<std::int64_t>(n.k) * cfg_.slot.us};
  n.fire = eng_.schedule(at, "dcf_fire", [this, node] { fire(node); });
}

void DcfMac::fire(int node) {
  Node& n = nodes_.at(node);
  n.armed = false;
  SimTime now = eng_.now();
  for (auto& [other, o] : nodes_) {
    if (other == node || !o.armed) continue;
    SimTime fa = o.base + cfg_.aifs +
                 SimTime{static_cast<std::int64_t>(o.k) * cfg_.slot.us};
    if (fa == now) continue;  // expires this very slot: it transmits too
    std::int64_t idle = (now - o.base - cfg_.aifs).us;
    if (idle > 0) o.k -= static_cast<int>(idle / cfg_.slot.us);
    eng_.cancel(o.fire);
    o.armed = false;
  }
  n.transmitting = true;
  SimTime s = now;
  SimTime e = s + phy_.tx_time(n.payload);
  ch_.begin(node, e,
            [this, node, s, e](bool col) { tx_done(node, s, e, col); });
}

void DcfMac::tx_done(int node, SimTime s, SimTime e, bool collided) {
  Node& n = nodes_.at(node);
  n.transmitting = false;
  if (collided) {
    if (trace_) trace_->line(s, 0, "dcf_collision", node, n.periods, "-");
    n.cw = widened(n.cw, n.cw_max);
    n.k = static_cast<int>(n.rng.below(n.cw + 1));
    n.periods += n.k;
    return;  // rearmed once the medium clears
  }
  if (trace_) trace_->line(s, 0, "dcf_tx", node, n.periods, "-");
  host_.finish_service(node, n.attempt, s, e);
  n.busy = false;
  if (host_.node_has_data(node)) begin_attempt(node);
}

void DcfMac::medium_idle(SimTime te) {
  for (auto& [node, n] : nodes_) {
    if (n.busy && !n.armed && !n.transmitting) arm(node, te);
  }
}

}  // namespace railsim::mac
