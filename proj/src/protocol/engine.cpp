#include <algorithm>
#include <stdexcept>

#include "ho/protocol.hpp"

namespace ho::protocol {
namespace {

void clear_ttt(ConnectionState& s) {
  std::fill(s.ttt_elapsed_ms.begin(), s.ttt_elapsed_ms.end(), std::nullopt);
}

void clear_link_monitor(ConnectionState& s) {
  s.t310_elapsed_ms.reset();
  s.oos_count = 0;
  s.is_count = 0;
}

void declare_rlf(ConnectionState& s, Tick tick, EventLog& events) {
  if (const auto* prep = std::get_if<Preparing>(&s.phase)) {
    events.push_back({tick, EventKind::Hof, s.serving, prep->target});
  }
  events.push_back({tick, EventKind::Rlf, s.serving, kNoBs});
  s.phase = Recovering{};
  clear_link_monitor(s);
  clear_ttt(s);
}

}  // namespace

int argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty range");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

ConnectionState initial_state(int serving, std::size_t n_bs) {
  if (serving < 0 || static_cast<std::size_t>(serving) >= n_bs) {
    throw std::out_of_range("initial serving BS out of range");
  }
  ConnectionState s;
  s.serving = serving;
  s.ttt_elapsed_ms.assign(n_bs, std::nullopt);
  return s;
}

bool detect_pp(const ConnectionState& s, int new_serving, Tick tick, const HoTiming& cfg) {
  if (!s.prev_bs || !s.last_ho_complete_tick) return false;
  return *s.prev_bs == new_serving && (tick - *s.last_ho_complete_tick) * kTickMs < cfg.mts_ms;
}

bool pp_window_open(const ConnectionState& s, Tick tick, const HoTiming& cfg) {
  return s.last_ho_complete_tick && (tick - *s.last_ho_complete_tick) * kTickMs < cfg.mts_ms;
}

void rlf_step(ConnectionState& s, Tick tick, double serving_sinr_db, const RlfConfig& cfg,
              EventLog& events) {
  if (serving_sinr_db < cfg.q_out_db) {
    events.push_back({tick, EventKind::OutOfSync, s.serving, kNoBs});
    s.oos_count = std::min(s.oos_count + 1, cfg.n310);
    s.is_count = 0;
  } else if (serving_sinr_db > cfg.q_in_db) {
    s.is_count = std::min(s.is_count + 1, cfg.n311);
    s.oos_count = 0;
  } else if (cfg.band_resets_counters) {
    s.oos_count = 0;
    s.is_count = 0;
  }

  if (s.t310_elapsed_ms) {
    if (s.is_count >= cfg.n311) {
      s.t310_elapsed_ms.reset();
      s.is_count = 0;
      return;
    }
    *s.t310_elapsed_ms += kTickMs;
    if (*s.t310_elapsed_ms >= cfg.t310_ms) declare_rlf(s, tick, events);
  } else if (s.oos_count >= cfg.n310) {
    s.t310_elapsed_ms = 0;
  }
}

bool advance_link(ConnectionState& s, Tick tick, std::span<const double> sinr_db,
                  const ProtocolConfig& cfg, EventLog& events) {
  if (auto* rec = std::get_if<Recovering>(&s.phase)) {
    rec->elapsed_ms += kTickMs;
    if (rec->elapsed_ms >= cfg.rlf.recovery_ms) {
      s.serving = argmax(sinr_db);
      s.phase = Connected{};
      s.prev_bs.reset();
      clear_link_monitor(s);
      clear_ttt(s);
      events.push_back({tick, EventKind::Recovered, s.serving, kNoBs});
    }
    return false;
  }

  if (auto* exec = std::get_if<Executing>(&s.phase)) {
    exec->elapsed_ms += kTickMs;
    if (exec->elapsed_ms >= cfg.timing.exec_ms) {
      const int source = s.serving;
      const int target = exec->target;
      const bool pp = detect_pp(s, target, tick, cfg.timing);
      s.serving = target;
      s.prev_bs = source;
      s.last_ho_complete_tick = tick;
      s.phase = Connected{};
      clear_link_monitor(s);
      clear_ttt(s);
      events.push_back({tick, EventKind::HoComplete, source, target});
      if (pp) events.push_back({tick, EventKind::PingPong, target, source});
    }
    return false;
  }

  rlf_step(s, tick, sinr_db[static_cast<std::size_t>(s.serving)], cfg.rlf, events);
  return !s.recovering();
}

void start_preparation(ConnectionState& s, Tick tick, int target, EventLog& events) {
  if (target == s.serving) throw std::invalid_argument("HO target equals serving cell");
  s.phase = Preparing{target, 0};
  clear_ttt(s);
  events.push_back({tick, EventKind::HoPrepStart, s.serving, target});
}

void abort_preparation(ConnectionState& s, Tick tick, EventLog& events) {
  const auto* prep = std::get_if<Preparing>(&s.phase);
  if (!prep) throw std::logic_error("abort_preparation outside Preparing");
  events.push_back({tick, EventKind::HoAbort, s.serving, prep->target});
  s.phase = Connected{};
  clear_ttt(s);
}

void continue_preparation(ConnectionState& s, Tick tick, const ProtocolConfig& cfg, EventLog& events) {
  auto* prep = std::get_if<Preparing>(&s.phase);
  if (!prep) throw std::logic_error("continue_preparation outside Preparing");
  prep->elapsed_ms += kTickMs;
  if (prep->elapsed_ms < cfg.timing.prep_ms) return;

  const int target = prep->target;
  events.push_back({tick, EventKind::HoCmd, s.serving, target});
  if (s.t310_elapsed_ms) {
    // Command received while T310 runs: the HO fails and the link is lost.
    events.push_back({tick, EventKind::Hof, s.serving, target});
    events.push_back({tick, EventKind::Rlf, s.serving, kNoBs});
    s.phase = Recovering{};
    clear_link_monitor(s);
    clear_ttt(s);
    return;
  }
  s.phase = Executing{target, 0};
}

void baseline_step(ConnectionState& s, Tick tick, std::span<const double> rsrp_l3_dbm,
                   std::span<const double> sinr_db, const ProtocolConfig& cfg, EventLog& events) {
  if (!advance_link(s, tick, sinr_db, cfg, events)) return;

  const auto serving = static_cast<std::size_t>(s.serving);
  if (const auto* prep = std::get_if<Preparing>(&s.phase)) {
    const auto target = static_cast<std::size_t>(prep->target);
    if (a3_leaving(rsrp_l3_dbm[target], rsrp_l3_dbm[serving], cfg.a3)) {
      abort_preparation(s, tick, events);
    } else {
      continue_preparation(s, tick, cfg, events);
    }
    return;
  }

  int best = kNoBs;
  for (std::size_t b = 0; b < rsrp_l3_dbm.size(); ++b) {
    auto& ttt = s.ttt_elapsed_ms[b];
    if (b == serving || !a3_entering(rsrp_l3_dbm[b], rsrp_l3_dbm[serving], cfg.a3)) {
      ttt.reset();
      continue;
    }
    ttt = ttt ? *ttt + kTickMs : 0;
    if (*ttt >= cfg.a3.ttt_ms &&
        (best == kNoBs || rsrp_l3_dbm[b] > rsrp_l3_dbm[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(b);
    }
  }
  if (best != kNoBs) start_preparation(s, tick, best, events);
}

RunResult run_baseline(std::span<const double> rsrp_l3_rowmajor, std::span<const double> sinr_rowmajor,
                       std::size_t n_bs, const ProtocolConfig& cfg) {
  cfg.validate();
  if (n_bs == 0 || rsrp_l3_rowmajor.size() != sinr_rowmajor.size() || sinr_rowmajor.size() % n_bs != 0) {
    throw std::invalid_argument("run_baseline: inconsistent series shapes");
  }
  const std::size_t n_ticks = sinr_rowmajor.size() / n_bs;
  RunResult out;
  out.timeline.serving.resize(n_ticks, kNoBs);
  if (n_ticks == 0) return out;

  ConnectionState s = initial_state(argmax(sinr_rowmajor.subspan(0, n_bs)), n_bs);
  for (std::size_t t = 0; t < n_ticks; ++t) {
    baseline_step(s, static_cast<Tick>(t), rsrp_l3_rowmajor.subspan(t * n_bs, n_bs),
                  sinr_rowmajor.subspan(t * n_bs, n_bs), cfg, out.events);
    out.timeline.serving[t] = s.in_service() ? s.serving : kNoBs;
  }
  return out;
}

}  // namespace ho::protocol
