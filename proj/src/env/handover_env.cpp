#include "ho/env.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace ho::env {

using protocol::Event;
using protocol::EventKind;

void EnvConfig::validate() const {
  if (!(reward_c > 0.0)) throw std::invalid_argument("env.reward_c must be positive");
  if (max_episode_ticks <= 0) throw std::invalid_argument("env.max_episode_ticks must be positive");
  if (phase != 1 && phase != 2) throw std::invalid_argument("env.phase must be 1 or 2");
  if (!(clip_lo_db < clip_hi_db)) throw std::invalid_argument("env.clip_lo_db must be below clip_hi_db");
}

double scale_sinr(double sinr_db, const EnvConfig& cfg) {
  const double clipped = std::clamp(sinr_db, cfg.clip_lo_db, cfg.clip_hi_db);
  return (clipped - cfg.clip_lo_db) / (cfg.clip_hi_db - cfg.clip_lo_db);
}

StateVector encode_state(std::span<const double> sinr_db, int serving, bool pp_flag, const EnvConfig& cfg) {
  const std::size_t n = sinr_db.size();
  if (serving < 0 || static_cast<std::size_t>(serving) >= n) {
    throw std::out_of_range("encode_state: serving BS out of range");
  }
  StateVector s(n);
  auto v = s.mutable_values();
  v[static_cast<std::size_t>(serving)] = 1.0;
  for (std::size_t i = 0; i < n; ++i) v[n + i] = scale_sinr(sinr_db[i], cfg);
  v[2 * n] = pp_flag ? 1.0 : 0.0;
  return s;
}

double compute_reward(const StateVector& state, bool in_service, std::span<const Event> tick_events,
                      double reward_c) {
  double r_sinr = 0.0;
  if (in_service) {
    const auto onehot = state.bs_onehot();
    const auto q = state.sinr_scaled();
    const auto serving = static_cast<std::size_t>(std::max_element(onehot.begin(), onehot.end()) - onehot.begin());
    r_sinr = q[serving];
    if (q[serving] >= *std::max_element(q.begin(), q.end())) r_sinr += reward_c;
  }
  bool pp = false;
  bool oos = false;
  bool rlf = false;
  for (const Event& e : tick_events) {
    pp |= e.kind == EventKind::PingPong;
    oos |= e.kind == EventKind::OutOfSync;
    rlf |= e.kind == EventKind::Rlf;
  }
  const double r_pp = pp ? -reward_c : 0.0;
  const double r_rlf = rlf ? -2.0 * reward_c : (oos ? -reward_c : 0.0);
  return r_sinr + r_pp + r_rlf;
}

Termination check_termination(std::span<const Event> tick_events, std::int64_t episode_ticks,
                              bool trace_exhausted, const EnvConfig& cfg) {
  Termination out;
  if (!cfg.evaluation) {
    for (const Event& e : tick_events) {
      if (e.kind == EventKind::Rlf) out.terminated = true;
      if (cfg.phase == 2 && e.kind == EventKind::PingPong) out.terminated = true;
    }
  }
  out.truncated = !out.terminated && (episode_ticks >= cfg.max_episode_ticks || trace_exhausted);
  return out;
}

HandoverEnv::HandoverEnv(std::shared_ptr<const Dataset> dataset, EnvConfig cfg,
                         protocol::ProtocolConfig protocol, std::uint64_t seed)
    : dataset_(std::move(dataset)), cfg_(cfg), protocol_(protocol), seed_(seed) {
  cfg_.validate();
  protocol_.validate();
  if (!dataset_ || dataset_->empty()) throw EnvError("environment dataset is empty");
  n_bs_ = dataset_->front().n_bs();
  for (const auto& trace : *dataset_) {
    if (trace.n_bs() != n_bs_) throw EnvError("all traces in a dataset must share the BS count");
    if (trace.n_ticks() < 2) throw EnvError("traces need at least 2 ticks");
  }
  if (n_bs_ == 0) throw EnvError("traces have no base stations");
  scratch_.resize(n_bs_);
}

void HandoverEnv::set_phase(int phase) {
  EnvConfig next = cfg_;
  next.phase = phase;
  next.validate();
  cfg_ = next;
}

StateVector HandoverEnv::reset() {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(episode_), static_cast<std::uint32_t>(episode_ >> 32)};
  std::mt19937_64 rng(seq);
  ++episode_;
  std::uniform_int_distribution<std::size_t> pick(0, dataset_->size() - 1);
  const std::size_t trace = pick(rng);
  std::vector<int> perm(n_bs_);
  std::iota(perm.begin(), perm.end(), 0);
  if (cfg_.shuffle_bs) std::shuffle(perm.begin(), perm.end(), rng);
  return reset_to(trace, std::move(perm));
}

StateVector HandoverEnv::reset_to(std::size_t trace_index, std::vector<int> permutation) {
  if (trace_index >= dataset_->size()) throw EnvError("trace index out of range");
  if (permutation.size() != n_bs_) throw EnvError("permutation size mismatch");
  std::vector<int> inv(n_bs_, -1);
  for (std::size_t i = 0; i < n_bs_; ++i) {
    const int p = permutation[i];
    if (p < 0 || static_cast<std::size_t>(p) >= n_bs_ || inv[static_cast<std::size_t>(p)] != -1) {
      throw EnvError("not a permutation");
    }
    inv[static_cast<std::size_t>(p)] = static_cast<int>(i);
  }
  trace_index_ = trace_index;
  perm_ = std::move(permutation);
  inv_perm_ = std::move(inv);
  tick_ = 0;
  done_ = false;
  episode_events_.clear();
  timeline_.clear();
  const auto& trace = (*dataset_)[trace_index_];
  conn_ = protocol::initial_state(protocol::argmax(trace.sinr_db.row(0)), n_bs_);
  return observe(0);
}

StateVector HandoverEnv::observe(std::int64_t tick) const {
  const auto& trace = (*dataset_)[trace_index_];
  const auto row = trace.sinr_db.row(static_cast<std::size_t>(tick));
  for (std::size_t b = 0; b < n_bs_; ++b) scratch_[static_cast<std::size_t>(perm_[b])] = row[b];
  return encode_state(scratch_, perm_[static_cast<std::size_t>(conn_.serving)],
                      protocol::pp_window_open(conn_, tick, protocol_.timing), cfg_);
}

StepResult HandoverEnv::step(int action) {
  if (done_) throw EnvError("step() called on a finished episode; call reset()");
  if (action < 0 || static_cast<std::size_t>(action) >= n_bs_) throw EnvError("action out of range");

  const auto& trace = (*dataset_)[trace_index_];
  const int chosen = inv_perm_[static_cast<std::size_t>(action)];
  const auto sinr = trace.sinr_db.row(static_cast<std::size_t>(tick_));

  StepResult result;
  auto& events = result.info.events;
  if (protocol::advance_link(conn_, tick_, sinr, protocol_, events)) {
    if (const auto* prep = std::get_if<protocol::Preparing>(&conn_.phase)) {
      // Choosing the serving cell means "remain connected": the running
      // preparation is aborted. A different neighbour restarts it.
      if (chosen == prep->target) {
        protocol::continue_preparation(conn_, tick_, protocol_, events);
      } else {
        protocol::abort_preparation(conn_, tick_, events);
        if (chosen != conn_.serving) protocol::start_preparation(conn_, tick_, chosen, events);
      }
    } else if (chosen != conn_.serving) {
      protocol::start_preparation(conn_, tick_, chosen, events);
    }
  } else {
    result.info.action_ignored = true;
  }

  for (const Event& e : events) {
    result.info.ho_prep_start |= e.kind == EventKind::HoPrepStart;
    result.info.ho_complete |= e.kind == EventKind::HoComplete;
    result.info.pp |= e.kind == EventKind::PingPong;
    result.info.oos |= e.kind == EventKind::OutOfSync;
    result.info.rlf |= e.kind == EventKind::Rlf;
    result.info.hof |= e.kind == EventKind::Hof;
  }

  const bool in_service = conn_.in_service();
  result.reward = compute_reward(observe(tick_), in_service, events, cfg_.reward_c);
  timeline_.push_back(in_service ? conn_.serving : protocol::kNoBs);
  episode_events_.insert(episode_events_.end(), events.begin(), events.end());

  ++tick_;
  const bool exhausted = static_cast<std::size_t>(tick_) >= trace.n_ticks();
  const Termination term = check_termination(events, tick_, exhausted, cfg_);
  result.terminated = term.terminated;
  result.truncated = term.truncated;
  done_ = term.terminated || term.truncated;
  result.next_state = observe(exhausted ? tick_ - 1 : tick_);
  return result;
}

}  // namespace ho::env
