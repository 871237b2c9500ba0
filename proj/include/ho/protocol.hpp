#pragma once

// Connection-state engine shared by the Event-A3 baseline and the learned
// controller: handover preparation/execution, radio link monitoring
// (N310/T310/N311), handover failure and ping-pong detection.
//
// Time advances in fixed ticks of tick_ms (10 ms). All timers are integer
// milliseconds so timelines are exact.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ho::protocol {

using Tick = std::int64_t;

inline constexpr int kTickMs = 10;

struct A3Config {
  double hys_db = 1.0;
  double off_db = 0.0;
  double off_n_db = 0.0;
  double off_cn_db = 0.0;
  double off_p_db = 0.0;
  double off_cp_db = 0.0;
  int ttt_ms = 40;

  void validate() const;
};

struct RlfConfig {
  double q_in_db = -6.0;
  double q_out_db = -8.0;
  int t310_ms = 1000;
  int n310 = 10;
  int n311 = 3;
  int recovery_ms = 200;
  // SINR inside [Q_out, Q_in] breaks both consecutive-indicator runs.
  bool band_resets_counters = true;

  void validate() const;
};

struct HoTiming {
  int prep_ms = 50;
  int exec_ms = 40;
  int mts_ms = 1000;

  void validate() const;
};

struct ProtocolConfig {
  A3Config a3;
  RlfConfig rlf;
  HoTiming timing;

  void validate() const {
    a3.validate();
    rlf.validate();
    timing.validate();
  }
};

enum class EventKind { HoPrepStart, HoAbort, HoCmd, HoComplete, PingPong, OutOfSync, Rlf, Hof, Recovered };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

inline constexpr int kNoBs = -1;

struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::HoPrepStart;
  int serving = kNoBs;
  int target = kNoBs;

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

struct Connected {
  bool operator==(const Connected&) const = default;
};
struct Preparing {
  int target = kNoBs;
  int elapsed_ms = 0;
  bool operator==(const Preparing&) const = default;
};
struct Executing {
  int target = kNoBs;
  int elapsed_ms = 0;
  bool operator==(const Executing&) const = default;
};
struct Recovering {
  int elapsed_ms = 0;
  bool operator==(const Recovering&) const = default;
};

using Phase = std::variant<Connected, Preparing, Executing, Recovering>;

struct ConnectionState {
  int serving = 0;
  Phase phase = Connected{};
  // Per-BS time the A3 entering condition has held; nullopt = not holding.
  std::vector<std::optional<int>> ttt_elapsed_ms;
  std::optional<int> t310_elapsed_ms;
  int oos_count = 0;
  int is_count = 0;
  std::optional<Tick> last_ho_complete_tick;
  std::optional<int> prev_bs;

  bool operator==(const ConnectionState&) const = default;

  bool connected() const { return std::holds_alternative<Connected>(phase); }
  bool preparing() const { return std::holds_alternative<Preparing>(phase); }
  bool executing() const { return std::holds_alternative<Executing>(phase); }
  bool recovering() const { return std::holds_alternative<Recovering>(phase); }
  // The UE has a data link on `serving` (not executing an HO, not recovering).
  bool in_service() const { return connected() || preparing(); }
};

ConnectionState initial_state(int serving, std::size_t n_bs);

// Event A3 entering condition:
//   M_n + Off_n + Off_cn - Hys > M_p + Off_p + Off_cp + Off
bool a3_entering(double m_n_dbm, double m_p_dbm, const A3Config& cfg);

// Event A3 leaving condition:
//   M_n + Off_n + Off_cn + Hys < M_p + Off_p + Off_cp + Off
bool a3_leaving(double m_n_dbm, double m_p_dbm, const A3Config& cfg);

// --- engine building blocks -------------------------------------------------

// One tick of link bookkeeping that runs before any controller decision:
// recovery countdown, HO execution countdown (HO_COMPLETE / PP), and radio
// link monitoring on the serving cell. Returns true when the controller may
// act this tick (phase Connected or Preparing after monitoring).
bool advance_link(ConnectionState& s, Tick tick, std::span<const double> sinr_db,
                  const ProtocolConfig& cfg, EventLog& events);

// Radio link monitor for one out-of-sync/in-sync indicator. Declares RLF
// (and HOF if a preparation is in flight) on T310 expiry.
void rlf_step(ConnectionState& s, Tick tick, double serving_sinr_db, const RlfConfig& cfg,
              EventLog& events);

void start_preparation(ConnectionState& s, Tick tick, int target, EventLog& events);
void abort_preparation(ConnectionState& s, Tick tick, EventLog& events);

// Advances the preparation timer by one tick; at prep_ms the HO command is
// issued, which fails (HOF + RLF) when T310 is running.
void continue_preparation(ConnectionState& s, Tick tick, const ProtocolConfig& cfg, EventLog& events);

// Ping-pong check at HO completion: the UE returned to the cell it left on the
// previous HO less than MTS after that HO completed.
bool detect_pp(const ConnectionState& s, int new_serving, Tick tick, const HoTiming& cfg);

// Elapsed time since the last completed HO is below MTS.
bool pp_window_open(const ConnectionState& s, Tick tick, const HoTiming& cfg);

// --- 3GPP baseline ----------------------------------------------------------

// One tick of the Event-A3 controller. rsrp_l3_dbm drives A3; sinr_db drives
// link monitoring and re-establishment.
void baseline_step(ConnectionState& s, Tick tick, std::span<const double> rsrp_l3_dbm,
                   std::span<const double> sinr_db, const ProtocolConfig& cfg, EventLog& events);

// Serving BS per tick, or kNoBs while executing an HO or recovering.
struct ServingTimeline {
  std::vector<int> serving;
};

struct RunResult {
  EventLog events;
  ServingTimeline timeline;
};

// Runs the baseline over whole per-BS series (rows = ticks). Initial serving
// cell is the argmax SINR at tick 0.
RunResult run_baseline(std::span<const double> rsrp_l3_rowmajor, std::span<const double> sinr_rowmajor,
                       std::size_t n_bs, const ProtocolConfig& cfg);

// Lowest index among the maxima.
int argmax(std::span<const double> values);

// --- event log export -------------------------------------------------------

void write_event_csv(std::ostream& out, const EventLog& log);
EventLog read_event_csv(std::istream& in);

}  // namespace ho::protocol
