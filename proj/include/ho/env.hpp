#pragma once

// Episodic environment around one UE trace and the connection engine.
//
// Observation (length 2N+1): one-hot serving BS, SINR per BS clipped to
// [clip_lo, clip_hi] dB and scaled to [0, 1], and a flag that is 1 while the
// last completed HO is younger than MTS. Action: a BS index. step(a) applies
// the action on the current tick, advances the engine by that tick, and
// returns the observation of the following tick.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "ho/channel.hpp"
#include "ho/protocol.hpp"

namespace ho::env {

struct EnvConfig {
  double reward_c = 0.95;
  int max_episode_ticks = 6000;
  int phase = 1;  // 1: terminate on RLF; 2: terminate on RLF or PP
  bool shuffle_bs = false;
  double clip_lo_db = -10.0;
  double clip_hi_db = 10.0;
  // Evaluation runs never terminate on PP/RLF.
  bool evaluation = false;

  void validate() const;
};

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t n_bs) : n_bs_(n_bs), values_(2 * n_bs + 1, 0.0) {}

  std::size_t n_bs() const { return n_bs_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<const double> bs_onehot() const { return {values_.data(), n_bs_}; }
  std::span<const double> sinr_scaled() const { return {values_.data() + n_bs_, n_bs_}; }
  double pp_flag() const { return values_.back(); }

  std::span<double> mutable_values() { return values_; }

  bool operator==(const StateVector&) const = default;

 private:
  std::size_t n_bs_ = 0;
  std::vector<double> values_;
};

// q = (clip(sinr, lo, hi) - lo) / (hi - lo)
double scale_sinr(double sinr_db, const EnvConfig& cfg);

StateVector encode_state(std::span<const double> sinr_db, int serving, bool pp_flag, const EnvConfig& cfg);

// r = r_SINR + r_PP + r_RLF for one tick.
//   r_SINR = q_serving (+C when serving attains the max q); 0 without service
//   r_PP   = -C on a ping-pong
//   r_RLF  = -2C on RLF, else -C on an out-of-sync indicator
double compute_reward(const StateVector& state, bool in_service, std::span<const protocol::Event> tick_events,
                      double reward_c);

struct Termination {
  bool terminated = false;
  bool truncated = false;
};

Termination check_termination(std::span<const protocol::Event> tick_events, std::int64_t episode_ticks,
                              bool trace_exhausted, const EnvConfig& cfg);

struct StepInfo {
  protocol::EventLog events;  // canonical (unshuffled) BS indices
  bool ho_prep_start = false;
  bool ho_complete = false;
  bool pp = false;
  bool oos = false;
  bool rlf = false;
  bool hof = false;
  bool action_ignored = false;
};

struct StepResult {
  StateVector next_state;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

using Dataset = std::vector<channel::RawTrace>;

class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HandoverEnv {
 public:
  HandoverEnv(std::shared_ptr<const Dataset> dataset, EnvConfig cfg, protocol::ProtocolConfig protocol,
              std::uint64_t seed);

  // Starts episode `episode_index()` and increments the counter. The trace
  // and BS permutation are a function of (seed, episode index) only.
  StateVector reset();

  // Explicit episode: trace index and permutation (perm[canonical] = observed).
  StateVector reset_to(std::size_t trace_index, std::vector<int> permutation);

  StepResult step(int action);

  std::size_t n_bs() const { return n_bs_; }
  std::size_t state_size() const { return 2 * n_bs_ + 1; }
  std::uint64_t episode_index() const { return episode_; }
  void set_episode_index(std::uint64_t e) { episode_ = e; }
  void set_phase(int phase);
  const EnvConfig& config() const { return cfg_; }

  std::size_t trace_index() const { return trace_index_; }
  const std::vector<int>& permutation() const { return perm_; }
  const protocol::ConnectionState& connection() const { return conn_; }
  std::int64_t tick() const { return tick_; }
  bool done() const { return done_; }

  // Whole-episode records in canonical BS indices.
  const protocol::EventLog& episode_events() const { return episode_events_; }
  const std::vector<int>& serving_timeline() const { return timeline_; }

 private:
  StateVector observe(std::int64_t tick) const;

  std::shared_ptr<const Dataset> dataset_;
  EnvConfig cfg_;
  protocol::ProtocolConfig protocol_;
  std::uint64_t seed_;
  std::size_t n_bs_ = 0;

  std::uint64_t episode_ = 0;
  std::size_t trace_index_ = 0;
  std::vector<int> perm_;
  std::vector<int> inv_perm_;
  protocol::ConnectionState conn_;
  std::int64_t tick_ = 0;
  bool done_ = true;
  protocol::EventLog episode_events_;
  std::vector<int> timeline_;
  mutable std::vector<double> scratch_;
};

}  // namespace ho::env
