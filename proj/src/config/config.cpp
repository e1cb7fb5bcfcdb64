#include "config/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace railsim::config {

namespace {

struct RawEntry {
  std::string key, value;
  int line;
};
struct RawSection {
  std::string name;  // "" for the top-level block
  int line;
  std::vector<RawEntry> entries;
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<RawSection> parse_raw(const std::string& text,
                                  std::vector<std::string>& errors) {
  std::vector<RawSection> sections;
  sections.push_back(RawSection{"", 0, {}});
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("line " + std::to_string(lineno) +
                         ": unterminated section header");
        continue;
      }
      sections.push_back(
          RawSection{trim(line.substr(1, line.size() - 2)), lineno, {}});
      continue;
    }
    std::size_t colon = line.find(':');
    if (colon == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected 'key: value'");
      continue;
    }
    sections.back().entries.push_back(RawEntry{
        trim(line.substr(0, colon)), trim(line.substr(colon + 1)), lineno});
  }
  return sections;
}

// exact decimal scaling: value * scale must land on an integer
std::optional<std::int64_t> scale_decimal(const std::string& num,
                                          std::int64_t scale) {
  std::string ip = num, fp;
  std::size_t dot = num.find('.');
  if (dot != std::string::npos) {
    ip = num.substr(0, dot);
    fp = num.substr(dot + 1);
  }
  if (ip.empty() && fp.empty()) return std::nullopt;
  for (char c : ip)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  for (char c : fp)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  std::int64_t whole = 0;
  try {
    whole = ip.empty() ? 0 : std::stoll(ip);
  } catch (...) {
    return std::nullopt;
  }
  std::int64_t result = whole * scale;
  std::int64_t rem_scale = scale;  // always a power of ten
  for (char c : fp) {
    if (rem_scale == 1) {
      if (c != '0') return std::nullopt;  // finer than the unit resolves
      continue;
    }
    rem_scale /= 10;
    result += (c - '0') * rem_scale;
  }
  return result;
}

}  // namespace

std::optional<std::int64_t> parse_duration_us(const std::string& s) {
  std::string num = s;
  std::int64_t scale = 0;
  if (s.size() > 2 && s.substr(s.size() - 2) == "us") {
    scale = 1;
    num = s.substr(0, s.size() - 2);
  } else if (s.size() > 2 && s.substr(s.size() - 2) == "ms") {
    scale = 1000;
    num = s.substr(0, s.size() - 2);
  } else if (s.size() > 1 && s.back() == 's') {
    scale = 1000000;
    num = s.substr(0, s.size() - 1);
  } else {
    return std::nullopt;  // unit is mandatory
  }
  return scale_decimal(trim(num), scale);
}

std::optional<std::int64_t> parse_rate_bps(const std::string& s) {
  std::string num = s;
  std::int64_t scale = 0;
  if (s.size() > 4 && s.substr(s.size() - 4) == "kbps") {
    scale = 1000;
    num = s.substr(0, s.size() - 4);
  } else if (s.size() > 4 && s.substr(s.size() - 4) == "mbps") {
    scale = 1000000;
    num = s.substr(0, s.size() - 4);
  } else if (s.size() > 3 && s.substr(s.size() - 3) == "bps") {
    scale = 1;
    num = s.substr(0, s.size() - 3);
  } else {
    return std::nullopt;
  }
  return scale_decimal(trim(num), scale);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// error-accumulating typed reads
struct Builder {
  std::vector<std::string>& errors;

  void err(int line, const std::string& msg) {
    errors.push_back("line " + std::to_string(line) + ": " + msg);
  }

  std::optional<std::int64_t> want_i64(const RawEntry& e) {
    try {
      std::size_t pos = 0;
      std::int64_t v = std::stoll(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      err(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
      return std::nullopt;
    }
  }

  std::optional<int> want_int(const RawEntry& e) {
    auto v = want_i64(e);
    if (!v) return std::nullopt;
    return static_cast<int>(*v);
  }

  std::optional<double> want_double(const RawEntry& e) {
    try {
      std::size_t pos = 0;
      double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      err(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
      return std::nullopt;
    }
  }

  std::optional<bool> want_bool(const RawEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    err(e.line, "'" + e.key + "' expects true or false, got '" + e.value + "'");
    return std::nullopt;
  }

  std::optional<SimTime> want_duration(const RawEntry& e) {
    auto v = parse_duration_us(e.value);
    if (!v) {
      err(e.line, "'" + e.key + "' expects a duration like 320us, 122.88ms, " +
                      "5s resolving to whole microseconds, got '" + e.value +
                      "'");
      return std::nullopt;
    }
    return SimTime{*v};
  }

  // "96kbps" or "0.5-1mbps"; a missing suffix on the low side inherits the
  // high side's suffix
  bool want_rate_range(const RawEntry& e, std::int64_t& lo, std::int64_t& hi) {
    std::size_t dash = e.value.find('-');
    if (dash == std::string::npos) {
      auto v = parse_rate_bps(e.value);
      if (!v) {
        err(e.line, "'" + e.key + "' expects a rate like 96kbps, got '" +
                        e.value + "'");
        return false;
      }
      lo = hi = *v;
      return true;
    }
    std::string left = trim(e.value.substr(0, dash));
    std::string right = trim(e.value.substr(dash + 1));
    auto hv = parse_rate_bps(right);
    if (!hv) {
      err(e.line, "'" + e.key + "' has an invalid upper rate '" + right + "'");
      return false;
    }
    std::size_t suf = right.find_first_not_of("0123456789.");
    auto lv = parse_rate_bps(left);
    if (!lv && suf != std::string::npos)
      lv = parse_rate_bps(left + right.substr(suf));
    if (!lv) {
      err(e.line, "'" + e.key + "' has an invalid lower rate '" + left + "'");
      return false;
    }
    lo = *lv;
    hi = *hv;
    return true;
  }
};

}  // namespace

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::BackoffQueue: return "backoff_queue";
    case Scheme::Csma154: return "csma154";
    case Scheme::Bmac: return "bmac";
    case Scheme::Dcf: return "dcf";
  }
  return "?";
}

int ScenarioConfig::total_nodes() const {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  if (topology) n += topology->vehicles * static_cast<int>(topology->sensors.size());
  return n;
}

LoadResult load_config(const std::string& text) {
  LoadResult out;
  std::vector<RawSection> raw = parse_raw(text, out.errors);
  ScenarioConfig c;
  Builder b{out.errors};
  bool scheme_seen = false;

  for (const RawSection& sec : raw) {
    if (sec.name.empty()) {
      for (const RawEntry& e : sec.entries) {
        if (e.key == "scheme") {
          scheme_seen = true;
          if (e.value == "backoff_queue") c.scheme = Scheme::BackoffQueue;
          else if (e.value == "csma154") c.scheme = Scheme::Csma154;
          else if (e.value == "bmac") c.scheme = Scheme::Bmac;
          else if (e.value == "dcf") c.scheme = Scheme::Dcf;
          else b.err(e.line, "unknown scheme '" + e.value + "'");
        } else if (e.key == "scenario") {
          c.scenario = e.value;
        } else if (e.key == "seed") {
          if (auto v = b.want_i64(e)) c.seed = static_cast<std::uint64_t>(*v);
        } else if (e.key == "horizon") {
          if (auto v = b.want_duration(e)) c.horizon = *v;
        } else if (e.key == "warmup") {
          if (auto v = b.want_duration(e)) c.warmup = *v;
        } else if (e.key == "max_turns") {
          if (auto v = b.want_i64(e)) c.max_turns = *v;
        } else if (e.key == "buffer_frames") {
          if (auto v = b.want_int(e)) c.buffer_frames = *v;
        } else if (e.key == "trace") {
          if (auto v = b.want_bool(e)) c.trace = *v;
        } else if (e.key == "roster") {
          if (e.value == "blocked")
            c.roster = RosterOrder::Blocked;
          else if (e.value == "interleaved")
            c.roster = RosterOrder::Interleaved;
          else
            b.err(e.line, "'roster' must be blocked or interleaved");
        } else {
          b.err(e.line, "unknown top-level key '" + e.key + "'");
        }
      }
      continue;
    }

    if (sec.name == "phy") {
      for (const RawEntry& e : sec.entries) {
        if (e.key == "bitrate") {
          std::int64_t lo, hi;
          if (b.want_rate_range(e, lo, hi)) {
            if (lo != hi) b.err(e.line, "'bitrate' must be a single rate");
            else c.phy.bitrate_bps = lo;
          }
        } else if (e.key == "overhead") {
          if (auto v = b.want_duration(e)) c.phy.overhead = *v;
        } else {
          b.err(e.line, "unknown [phy] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "mac") {
      if (!c.mac) c.mac = BqMacConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "backoff_slot") {
          if (auto v = b.want_duration(e)) c.mac->backoff_slot = *v;
        } else if (e.key == "slot_count") {
          if (auto v = b.want_int(e)) c.mac->slot_count = *v;
        } else if (e.key == "beacon_interval") {
          if (auto v = b.want_duration(e)) c.mac->beacon_interval = *v;
        } else if (e.key == "beacon_time") {
          if (auto v = b.want_duration(e)) c.mac->beacon_time = *v;
        } else if (e.key == "capacity") {
          if (auto v = b.want_int(e)) c.mac->capacity = *v;
        } else if (e.key == "miss_threshold") {
          if (auto v = b.want_int(e)) c.mac->miss_threshold = *v;
        } else if (e.key == "reserved_safety_slot") {
          if (auto v = b.want_bool(e)) c.mac->reserved_safety_slot = *v;
        } else if (e.key == "safety_gateway") {
          if (auto v = b.want_bool(e)) c.mac->safety_gateway = *v;
        } else {
          b.err(e.line, "unknown [mac] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "csma") {
      if (!c.csma) c.csma = CsmaConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "backoff_slot") {
          if (auto v = b.want_duration(e)) c.csma->backoff_slot = *v;
        } else if (e.key == "be_min") {
          if (auto v = b.want_int(e)) c.csma->be_min = *v;
        } else if (e.key == "be_max") {
          if (auto v = b.want_int(e)) c.csma->be_max = *v;
        } else if (e.key == "max_backoffs") {
          if (auto v = b.want_int(e)) c.csma->max_backoffs = *v;
        } else if (e.key == "cca_slots") {
          if (auto v = b.want_int(e)) c.csma->cca_slots = *v;
        } else if (e.key == "beacon_interval") {
          if (auto v = b.want_duration(e)) c.csma->beacon_interval = *v;
        } else if (e.key == "beacon_time") {
          if (auto v = b.want_duration(e)) c.csma->beacon_time = *v;
        } else if (e.key == "slot_count") {
          if (auto v = b.want_int(e)) c.csma->slot_count = *v;
        } else if (e.key == "slot_duration") {
          if (auto v = b.want_duration(e)) c.csma->slot_duration = *v;
        } else {
          b.err(e.line, "unknown [csma] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "dcf") {
      if (!c.dcf) c.dcf = DcfConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "slot") {
          if (auto v = b.want_duration(e)) c.dcf->slot = *v;
        } else if (e.key == "cw_min") {
          if (auto v = b.want_int(e)) c.dcf->cw_min = *v;
        } else if (e.key == "cw_max") {
          if (auto v = b.want_int(e)) c.dcf->cw_max = *v;
        } else if (e.key == "aifs") {
          if (auto v = b.want_duration(e)) c.dcf->aifs = *v;
        } else if (e.key == "edca") {
          if (auto v = b.want_bool(e)) c.dcf->edca = *v;
        } else {
          b.err(e.line, "unknown [dcf] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "lpl") {
      if (!c.lpl) c.lpl = LplConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "check_interval") {
          if (auto v = b.want_duration(e)) c.lpl->check_interval = *v;
        } else if (e.key == "backoff_slots") {
          if (auto v = b.want_int(e)) c.lpl->backoff_slots = *v;
        } else if (e.key == "congestion_slots") {
          if (auto v = b.want_int(e)) c.lpl->congestion_slots = *v;
        } else if (e.key == "backoff_slot") {
          if (auto v = b.want_duration(e)) c.lpl->backoff_slot = *v;
        } else {
          b.err(e.line, "unknown [lpl] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "group") {
      GroupConfig g;
      for (const RawEntry& e : sec.entries) {
        if (e.key == "name") {
          g.name = e.value;
        } else if (e.key == "count") {
          if (auto v = b.want_int(e)) g.count = *v;
        } else if (e.key == "payload") {
          if (auto v = b.want_int(e)) g.payload = *v;
        } else if (e.key == "kind") {
          if (e.value == "periodic") g.kind = workload::TrafficKind::Periodic;
          else if (e.value == "uniform") g.kind = workload::TrafficKind::UniformRandom;
          else if (e.value == "rate") g.kind = workload::TrafficKind::RateDriven;
          else if (e.value == "silent") g.kind = workload::TrafficKind::Silent;
          else b.err(e.line, "unknown traffic kind '" + e.value + "'");
        } else if (e.key == "period") {
          if (auto v = b.want_duration(e)) g.period = *v;
        } else if (e.key == "period_min") {
          if (auto v = b.want_duration(e)) g.period_min = *v;
        } else if (e.key == "period_max") {
          if (auto v = b.want_duration(e)) g.period_max = *v;
        } else if (e.key == "rate") {
          b.want_rate_range(e, g.rate_lo_bps, g.rate_hi_bps);
        } else if (e.key == "class") {
          if (e.value == "voip") g.access = workload::AccessClass::Voip;
          else if (e.value == "video") g.access = workload::AccessClass::Video;
          else if (e.value == "streaming") g.access = workload::AccessClass::Streaming;
          else b.err(e.line, "unknown access class '" + e.value + "'");
        } else if (e.key == "join") {
          if (e.value == "auto") g.scripted_join = false;
          else if (e.value == "scripted") g.scripted_join = true;
          else b.err(e.line, "'join' expects auto or scripted");
        } else {
          b.err(e.line, "unknown [group] key '" + e.key + "'");
        }
      }
      if (g.name.empty())
        b.err(sec.line, "[group] requires a name");
      c.groups.push_back(g);
    } else if (sec.name == "track") {
      if (!c.track) c.track = TrackConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "segment") {
          std::istringstream ss(e.value);
          std::string kind;
          double len = 0;
          ss >> kind >> len;
          SegmentConfig seg;
          seg.length_m = len;
          if (kind == "straight" && len > 0 && ss.eof()) {
            c.track->segments.push_back(seg);
          } else if (kind == "curved" && len > 0) {
            std::string r;
            ss >> r;
            if (r.size() > 1 && r[0] == 'r') {
              seg.curved = true;
              try {
                seg.radius_m = std::stod(r.substr(1));
              } catch (...) {
                seg.radius_m = 0;
              }
            }
            if (seg.curved && seg.radius_m > 0)
              c.track->segments.push_back(seg);
            else
              b.err(e.line, "curved segment needs 'curved <len> r<radius>'");
          } else {
            b.err(e.line,
                  "segment expects 'straight <len>' or 'curved <len> r<radius>'");
          }
        } else if (e.key == "tag_interval") {
          if (auto v = b.want_double(e)) c.track->tag_interval_m = *v;
        } else {
          b.err(e.line, "unknown [track] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "train") {
      if (!c.train) c.train = TrainConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "v0") {
          if (auto v = b.want_double(e)) c.train->v0 = *v;
        } else if (e.key == "accel") {
          if (auto v = b.want_double(e)) c.train->accel = *v;
        } else if (e.key == "accel_until") {
          if (auto v = b.want_duration(e)) c.train->accel_until = *v;
        } else {
          b.err(e.line, "unknown [train] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "topology") {
      if (!c.topology) c.topology = TopologyConfig{};
      for (const RawEntry& e : sec.entries) {
        if (e.key == "vehicles") {
          if (auto v = b.want_int(e)) c.topology->vehicles = *v;
        } else if (e.key == "sensor") {
          SensorConfig s;
          std::istringstream ss(e.value);
          ss >> s.cls;
          std::string tok;
          bool bad = s.cls.empty();
          while (ss >> tok) {
            std::size_t eq = tok.find('=');
            if (eq == std::string::npos) {
              bad = true;
              break;
            }
            std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "base") {
              auto d = parse_duration_us(v);
              if (d) s.base_period = SimTime{*d}; else bad = true;
            } else if (k == "min") {
              auto d = parse_duration_us(v);
              if (d) s.min_period = SimTime{*d}; else bad = true;
            } else if (k == "alpha") {
              try { s.alpha = std::stod(v); } catch (...) { bad = true; }
            } else if (k == "beta") {
              try { s.beta = std::stod(v); } catch (...) { bad = true; }
            } else if (k == "payload") {
              try { s.payload = std::stoi(v); } catch (...) { bad = true; }
            } else if (k == "dead") {
              if (v == "true") s.dead = true;
              else if (v == "false") s.dead = false;
              else bad = true;
            } else {
              bad = true;
            }
          }
          if (bad)
            b.err(e.line, "sensor expects '<class> base=.. min=.. alpha=.. "
                          "beta=.. [payload=..] [dead=..]'");
          else
            c.topology->sensors.push_back(s);
        } else if (e.key == "controller_period") {
          if (auto v = b.want_duration(e)) c.topology->controller_period = *v;
        } else if (e.key == "hop_latency") {
          if (auto v = b.want_duration(e)) c.topology->hop_latency = *v;
        } else if (e.key == "lookahead") {
          if (auto v = b.want_double(e)) c.topology->lookahead_m = *v;
        } else if (e.key == "v_ref") {
          if (auto v = b.want_double(e)) c.topology->v_ref = *v;
        } else if (e.key == "speed_threshold") {
          if (auto v = b.want_double(e)) c.topology->speed_threshold = *v;
        } else if (e.key == "safety_service") {
          if (auto v = b.want_duration(e)) c.topology->safety_service = *v;
        } else if (e.key == "diagnose") {
          if (auto v = b.want_bool(e)) c.topology->diagnose = *v;
        } else {
          b.err(e.line, "unknown [topology] key '" + e.key + "'");
        }
      }
    } else if (sec.name == "script") {
      for (const RawEntry& e : sec.entries) {
        ScriptOp op;
        if (e.key == "join") op.kind = ScriptOp::Kind::Join;
        else if (e.key == "dequeue") op.kind = ScriptOp::Kind::Dequeue;
        else if (e.key == "kill") op.kind = ScriptOp::Kind::Kill;
        else {
          b.err(e.line, "unknown [script] key '" + e.key + "'");
          continue;
        }
        std::istringstream ss(e.value);
        std::string node_s, at_s;
        ss >> node_s >> at_s;
        bool ok = !node_s.empty() && !at_s.empty();
        if (ok) {
          try { op.node = std::stoi(node_s); } catch (...) { ok = false; }
          auto d = parse_duration_us(at_s);
          if (d) op.at = SimTime{*d}; else ok = false;
        }
        if (!ok)
          b.err(e.line, "'" + e.key + "' expects '<node> <time>'");
        else
          c.script.push_back(op);
      }
    } else {
      b.err(sec.line, "unknown section [" + sec.name + "]");
    }
  }

  // cross-field validation; every failure is reported
  auto verr = [&](const std::string& m) { out.errors.push_back(m); };
  if (!scheme_seen) verr("missing required key 'scheme'");
  int scheme_sections = (c.mac ? 1 : 0) + (c.csma ? 1 : 0) + (c.dcf ? 1 : 0) +
                        (c.lpl ? 1 : 0);
  const char* want_section =
      c.scheme == Scheme::BackoffQueue ? "mac"
      : c.scheme == Scheme::Csma154    ? "csma"
      : c.scheme == Scheme::Dcf        ? "dcf"
                                       : "lpl";
  bool have_matching = (c.scheme == Scheme::BackoffQueue && c.mac) ||
                       (c.scheme == Scheme::Csma154 && c.csma) ||
                       (c.scheme == Scheme::Dcf && c.dcf) ||
                       (c.scheme == Scheme::Bmac && c.lpl);
  if (scheme_seen && !have_matching)
    verr(std::string("scheme ") + scheme_name(c.scheme) +
         " requires a [" + want_section + "] section");
  if (scheme_seen && scheme_sections > (have_matching ? 1 : 0))
    verr(std::string("exactly one scheme section is allowed and it must be [") +
         want_section + "]");

  if (c.horizon <= c.warmup)
    verr("'horizon' (" + format_time(c.horizon) +
         ") must exceed 'warmup' (" + format_time(c.warmup) + ")");
  if (c.buffer_frames < 1) verr("'buffer_frames' must be >= 1");
  if (c.max_turns < 0) verr("'max_turns' must be >= 0");
  if (c.phy.bitrate_bps <= 0) verr("[phy] bitrate must be positive");
  if (c.phy.overhead.us < 0) verr("[phy] overhead must be non-negative");

  bool have_groups = !c.groups.empty();
  bool have_topo = c.topology.has_value();
  if (have_groups == have_topo)
    verr("exactly one traffic source is required: [group] sections or a "
         "[topology] section");

  std::set<std::string> names;
  for (const auto& g : c.groups) {
    std::string at = "[group] '" + g.name + "'";
    if (!g.name.empty() && !names.insert(g.name).second)
      verr(at + ": duplicate group name");
    if (g.count < 1) verr(at + ": count must be >= 1");
    if (g.payload < 1) verr(at + ": payload must be >= 1");
    switch (g.kind) {
      case workload::TrafficKind::Periodic:
        if (g.period.us <= 0) verr(at + ": periodic kind requires period > 0");
        break;
      case workload::TrafficKind::UniformRandom:
        if (g.period_min.us <= 0 || g.period_max < g.period_min)
          verr(at + ": uniform kind requires 0 < period_min <= period_max");
        break;
      case workload::TrafficKind::RateDriven:
        if (g.rate_lo_bps <= 0 || g.rate_hi_bps < g.rate_lo_bps)
          verr(at + ": rate kind requires a positive rate or range");
        break;
      default:
        break;
    }
  }

  if (c.mac) {
    if (c.mac->capacity < 1) verr("[mac] capacity must be >= 1");
    if (c.mac->slot_count < 1) verr("[mac] slot_count must be >= 1");
    if (c.mac->miss_threshold < 1) verr("[mac] miss_threshold must be >= 1");
    if (c.mac->backoff_slot.us <= 0) verr("[mac] backoff_slot must be positive");
    std::int64_t window =
        (c.mac->beacon_interval - c.mac->beacon_time).us / c.mac->slot_count;
    if (window <= 0)
      verr("[mac] beacon_interval minus beacon_time leaves no slot window");
    if (c.mac->reserved_safety_slot && c.mac->slot_count < 2)
      verr("[mac] reserved_safety_slot needs slot_count >= 2");
  }
  if (c.csma) {
    if (c.csma->be_min < 0 || c.csma->be_max < c.csma->be_min)
      verr("[csma] requires 0 <= be_min <= be_max");
    if (c.csma->max_backoffs < 0) verr("[csma] max_backoffs must be >= 0");
    if (c.csma->cca_slots < 1) verr("[csma] cca_slots must be >= 1");
    if (c.csma->slot_count < 1) verr("[csma] slot_count must be >= 1");
    if (c.csma->slot_duration.us <= 0)
      verr("[csma] slot_duration must be positive");
    std::int64_t active = c.csma->beacon_time.us +
                          c.csma->slot_count * c.csma->slot_duration.us;
    if (active > c.csma->beacon_interval.us)
      verr("[csma] beacon plus contention slots exceed beacon_interval");
  }
  if (c.dcf) {
    auto pow2m1 = [](int v) { return v > 0 && ((v + 1) & v) == 0; };
    if (!pow2m1(c.dcf->cw_min) || !pow2m1(c.dcf->cw_max))
      verr("[dcf] cw_min and cw_max must be of the form 2^k - 1");
    if (c.dcf->cw_min > c.dcf->cw_max) verr("[dcf] cw_min must be <= cw_max");
    if (c.dcf->slot.us <= 0) verr("[dcf] slot must be positive");
  }
  if (c.lpl) {
    if (c.lpl->check_interval.us <= 0)
      verr("[lpl] check_interval must be positive");
    if (c.lpl->backoff_slots < 1) verr("[lpl] backoff_slots must be >= 1");
    if (c.lpl->backoff_slot.us <= 0) verr("[lpl] backoff_slot must be positive");
  }

  if (have_topo) {
    const TopologyConfig& t = *c.topology;
    if (t.vehicles < 1) verr("[topology] vehicles must be >= 1");
    if (t.sensors.empty()) verr("[topology] needs at least one sensor line");
    static const std::set<std::string> kClasses = {
        "tilt",            "wheel_defect",      "axle_defect",
        "pantograph_video", "position_reader",  "interior_humidity",
        "interior_fire"};
    for (const auto& s : t.sensors) {
      if (!kClasses.count(s.cls))
        verr("[topology] unknown sensor class '" + s.cls + "'");
      if (s.min_period > s.base_period)
        verr("[topology] sensor '" + s.cls + "': min must be <= base");
      if (s.alpha < 0 || s.beta < 0)
        verr("[topology] sensor '" + s.cls + "': alpha and beta must be >= 0");
      if ((s.cls == "interior_humidity" || s.cls == "interior_fire") &&
          (s.alpha != 0 || s.beta != 0))
        verr("[topology] interior sensor '" + s.cls +
             "' must keep alpha=0 beta=0");
      if (s.payload < 1)
        verr("[topology] sensor '" + s.cls + "': payload must be >= 1");
    }
    if (!c.track || c.track->segments.empty())
      verr("a [topology] scenario requires a [track] with segments");
    if (!c.train) verr("a [topology] scenario requires a [train] section");
    if (c.scheme != Scheme::BackoffQueue)
      verr("[topology] scenarios run on the backoff_queue scheme only");
  }
  if (c.track) {
    if (c.track->tag_interval_m < 0) verr("[track] tag_interval must be >= 0");
  }

  // roster capacity per coordinator
  if (c.mac && have_groups) {
    int usable = (c.mac->slot_count - (c.mac->reserved_safety_slot ? 1 : 0)) *
                 c.mac->capacity;
    if (c.total_nodes() > usable)
      verr("roster of " + std::to_string(c.total_nodes()) +
           " nodes exceeds network capacity of " + std::to_string(usable));
  }
  if (c.mac && have_topo) {
    int per_vehicle = static_cast<int>(c.topology->sensors.size());
    int usable = (c.mac->slot_count - (c.mac->reserved_safety_slot ? 1 : 0)) *
                 c.mac->capacity;
    if (per_vehicle > usable)
      verr("vehicle roster of " + std::to_string(per_vehicle) +
           " sensors exceeds cluster capacity of " + std::to_string(usable));
  }

  int total = c.total_nodes();
  for (const auto& op : c.script) {
    if (op.node < 1 || op.node > total)
      verr("[script] references node " + std::to_string(op.node) +
           " outside the roster 1.." + std::to_string(total));
  }
  // join targets must come from scripted-join groups
  {
    int base = 0;
    std::vector<std::pair<int, int>> scripted_ranges;  // [lo, hi]
    for (const auto& g : c.groups) {
      if (g.scripted_join) scripted_ranges.emplace_back(base + 1, base + g.count);
      base += g.count;
    }
    for (const auto& op : c.script) {
      if (op.kind != ScriptOp::Kind::Join) continue;
      bool inside = false;
      for (auto [lo, hi] : scripted_ranges)
        inside = inside || (op.node >= lo && op.node <= hi);
      if (!inside)
        verr("[script] join targets node " + std::to_string(op.node) +
             " which is not in a 'join: scripted' group");
    }
  }

  if (out.errors.empty()) out.config = c;
  return out;
}

LoadResult load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    LoadResult r;
    r.errors.push_back("cannot open config file: " + path);
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

namespace {

void put_dur(std::ostringstream& os, const char* key, SimTime v) {
  os << key << ": " << v.us << "us\n";
}

}  // namespace

std::string serialize(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "scheme: " << scheme_name(c.scheme) << "\n";
  os << "scenario: " << c.scenario << "\n";
  os << "seed: " << c.seed << "\n";
  put_dur(os, "horizon", c.horizon);
  put_dur(os, "warmup", c.warmup);
  os << "max_turns: " << c.max_turns << "\n";
  os << "buffer_frames: " << c.buffer_frames << "\n";
  os << "trace: " << (c.trace ? "true" : "false") << "\n";
  os << "roster: "
     << (c.roster == RosterOrder::Interleaved ? "interleaved" : "blocked")
     << "\n";

  os << "\n[phy]\n";
  os << "bitrate: " << c.phy.bitrate_bps << "bps\n";
  put_dur(os, "overhead", c.phy.overhead);

  if (c.mac) {
    os << "\n[mac]\n";
    put_dur(os, "backoff_slot", c.mac->backoff_slot);
    os << "slot_count: " << c.mac->slot_count << "\n";
    put_dur(os, "beacon_interval", c.mac->beacon_interval);
    put_dur(os, "beacon_time", c.mac->beacon_time);
    os << "capacity: " << c.mac->capacity << "\n";
    os << "miss_threshold: " << c.mac->miss_threshold << "\n";
    os << "reserved_safety_slot: "
       << (c.mac->reserved_safety_slot ? "true" : "false") << "\n";
    os << "safety_gateway: " << (c.mac->safety_gateway ? "true" : "false")
       << "\n";
  }
  if (c.csma) {
    os << "\n[csma]\n";
    put_dur(os, "backoff_slot", c.csma->backoff_slot);
    os << "be_min: " << c.csma->be_min << "\n";
    os << "be_max: " << c.csma->be_max << "\n";
    os << "max_backoffs: " << c.csma->max_backoffs << "\n";
    os << "cca_slots: " << c.csma->cca_slots << "\n";
    put_dur(os, "beacon_interval", c.csma->beacon_interval);
    put_dur(os, "beacon_time", c.csma->beacon_time);
    os << "slot_count: " << c.csma->slot_count << "\n";
    put_dur(os, "slot_duration", c.csma->slot_duration);
  }
  if (c.dcf) {
    os << "\n[dcf]\n";
    put_dur(os, "slot", c.dcf->slot);
    os << "cw_min: " << c.dcf->cw_min << "\n";
    os << "cw_max: " << c.dcf->cw_max << "\n";
    put_dur(os, "aifs", c.dcf->aifs);
    os << "edca: " << (c.dcf->edca ? "true" : "false") << "\n";
  }
  if (c.lpl) {
    os << "\n[lpl]\n";
    put_dur(os, "check_interval", c.lpl->check_interval);
    os << "backoff_slots: " << c.lpl->backoff_slots << "\n";
    os << "congestion_slots: " << c.lpl->congestion_slots << "\n";
    put_dur(os, "backoff_slot", c.lpl->backoff_slot);
  }

  for (const auto& g : c.groups) {
    os << "\n[group]\n";
    os << "name: " << g.name << "\n";
    os << "count: " << g.count << "\n";
    os << "payload: " << g.payload << "\n";
    switch (g.kind) {
      case workload::TrafficKind::Periodic:
        os << "kind: periodic\n";
        put_dur(os, "period", g.period);
        break;
      case workload::TrafficKind::UniformRandom:
        os << "kind: uniform\n";
        put_dur(os, "period_min", g.period_min);
        put_dur(os, "period_max", g.period_max);
        break;
      case workload::TrafficKind::RateDriven:
        os << "kind: rate\n";
        if (g.rate_lo_bps == g.rate_hi_bps)
          os << "rate: " << g.rate_lo_bps << "bps\n";
        else
          os << "rate: " << g.rate_lo_bps << "-" << g.rate_hi_bps << "bps\n";
        break;
      case workload::TrafficKind::Silent:
        os << "kind: silent\n";
        break;
      case workload::TrafficKind::SituationDriven:
        break;  // situation traffic is declared via [topology], never [group]
    }
    if (g.kind == workload::TrafficKind::RateDriven) {
      const char* ac = g.access == workload::AccessClass::Voip    ? "voip"
                       : g.access == workload::AccessClass::Video ? "video"
                                                                  : "streaming";
      os << "class: " << ac << "\n";
    }
    if (g.scripted_join) os << "join: scripted\n";
  }

  if (c.track) {
    os << "\n[track]\n";
    for (const auto& s : c.track->segments) {
      if (s.curved)
        os << "segment: curved " << fmt_double(s.length_m) << " r"
           << fmt_double(s.radius_m) << "\n";
      else
        os << "segment: straight " << fmt_double(s.length_m) << "\n";
    }
    os << "tag_interval: " << fmt_double(c.track->tag_interval_m) << "\n";
  }
  if (c.train) {
    os << "\n[train]\n";
    os << "v0: " << fmt_double(c.train->v0) << "\n";
    os << "accel: " << fmt_double(c.train->accel) << "\n";
    put_dur(os, "accel_until", c.train->accel_until);
  }
  if (c.topology) {
    const TopologyConfig& t = *c.topology;
    os << "\n[topology]\n";
    os << "vehicles: " << t.vehicles << "\n";
    for (const auto& s : t.sensors) {
      os << "sensor: " << s.cls << " base=" << s.base_period.us
         << "us min=" << s.min_period.us << "us alpha=" << fmt_double(s.alpha)
         << " beta=" << fmt_double(s.beta) << " payload=" << s.payload;
      if (s.dead) os << " dead=true";
      os << "\n";
    }
    put_dur(os, "controller_period", t.controller_period);
    put_dur(os, "hop_latency", t.hop_latency);
    os << "lookahead: " << fmt_double(t.lookahead_m) << "\n";
    os << "v_ref: " << fmt_double(t.v_ref) << "\n";
    os << "speed_threshold: " << fmt_double(t.speed_threshold) << "\n";
    put_dur(os, "safety_service", t.safety_service);
    os << "diagnose: " << (t.diagnose ? "true" : "false") << "\n";
  }
  if (!c.script.empty()) {
    os << "\n[script]\n";
    for (const auto& op : c.script) {
      const char* k = op.kind == ScriptOp::Kind::Join      ? "join"
                      : op.kind == ScriptOp::Kind::Dequeue ? "dequeue"
                                                           : "kill";
      os << k << ": " << op.node << " " << op.at.us << "us\n";
    }
  }
  return os.str();
}

}  // namespace railsim::config
