#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "ho/env.hpp"
#include "support.hpp"

using namespace ho::env;
using ho::protocol::Event;
using ho::protocol::EventKind;
using ho::protocol::EventLog;

namespace {

std::shared_ptr<const Dataset> dataset_of(std::vector<ho::channel::RawTrace> traces) {
  return std::make_shared<const Dataset>(std::move(traces));
}

std::vector<std::int64_t> ticks_of(const EventLog& log, EventKind kind) {
  std::vector<std::int64_t> out;
  for (const auto& e : log) {
    if (e.kind == kind) out.push_back(e.tick);
  }
  return out;
}

// Good, steady link on cell 0; cell 1 a little weaker.
ho::channel::RawTrace steady_two_cell(std::size_t ticks) {
  return ho::test::make_trace(std::vector<std::vector<double>>(ticks, {8.0, 4.0}));
}

}  // namespace

TEST_SUITE("state encoding") {
  TEST_CASE("sinr scaling endpoints, midpoint and clipping") {
    const EnvConfig c;
    CHECK(scale_sinr(-10.0, c) == 0.0);
    CHECK(scale_sinr(10.0, c) == 1.0);
    CHECK(scale_sinr(0.0, c) == 0.5);
    CHECK(scale_sinr(15.0, c) == 1.0);
    CHECK(scale_sinr(-40.0, c) == 0.0);
  }

  TEST_CASE("layout is one-hot, scaled sinr, pp flag") {
    const EnvConfig c;
    const std::vector<double> sinr = {-12.0, 0.0, 5.0};
    const auto s = encode_state(sinr, 2, true, c);
    REQUIRE(s.size() == 7);
    CHECK(std::vector<double>(s.values().begin(), s.values().end()) ==
          std::vector<double>{0, 0, 1, 0.0, 0.5, 0.75, 1.0});
    CHECK(encode_state(sinr, 0, false, c).pp_flag() == 0.0);
    CHECK_THROWS(encode_state(sinr, 3, false, c));
  }

  TEST_CASE("state invariants hold along random episodes") {
    auto data = dataset_of({ho::test::random_trace(400, 4, 3)});
    HandoverEnv env(data, EnvConfig{}, {}, 5);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> act(0, 3);
    auto s = env.reset();
    for (int k = 0; k < 400 && !env.done(); ++k) {
      REQUIRE(s.size() == 2 * 4 + 1);
      const auto onehot = s.bs_onehot();
      CHECK(std::count(onehot.begin(), onehot.end(), 1.0) == 1);
      CHECK(std::count(onehot.begin(), onehot.end(), 0.0) == 3);
      for (double q : s.sinr_scaled()) {
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
      }
      CHECK((s.pp_flag() == 0.0 || s.pp_flag() == 1.0));
      s = env.step(act(rng)).next_state;
    }
  }
}

TEST_SUITE("reward") {
  StateVector state_with(double q_serving, double q_other, bool serving_first = true) {
    EnvConfig c;
    const double a = q_serving * 20.0 - 10.0;
    const double b = q_other * 20.0 - 10.0;
    return serving_first ? encode_state(std::vector<double>{a, b}, 0, false, c)
                         : encode_state(std::vector<double>{b, a}, 1, false, c);
  }

  TEST_CASE("best cell gets the bonus") {
    CHECK(compute_reward(state_with(0.8, 0.3), true, {}, 0.95) == doctest::Approx(1.75));
  }

  TEST_CASE("ping-pong costs C") {
    const std::vector<Event> ev = {{0, EventKind::PingPong, 0, 1}};
    CHECK(compute_reward(state_with(0.6, 0.9), true, ev, 0.95) == doctest::Approx(-0.35));
  }

  TEST_CASE("RLF costs 2C and supersedes out-of-sync") {
    const std::vector<Event> ev = {{0, EventKind::OutOfSync, 0, -1}, {0, EventKind::Rlf, 0, -1}};
    CHECK(compute_reward(state_with(0.0, 0.4), true, ev, 0.95) == doctest::Approx(-1.9));
    const std::vector<Event> oos = {{0, EventKind::OutOfSync, 0, -1}};
    CHECK(compute_reward(state_with(0.0, 0.4), true, oos, 0.95) == doctest::Approx(-0.95));
  }

  TEST_CASE("ties for the best cell still earn the bonus") {
    CHECK(compute_reward(state_with(0.5, 0.5, false), true, {}, 0.95) == doctest::Approx(1.45));
  }

  TEST_CASE("no service earns no rate reward") {
    CHECK(compute_reward(state_with(0.9, 0.1), false, {}, 0.95) == 0.0);
  }

  TEST_CASE("rewards stay inside [-2C, 1 + C] on random episodes") {
    auto data = dataset_of({ho::test::random_trace(3000, 3, 11, -20.0, 15.0)});
    EnvConfig cfg;
    cfg.evaluation = true;
    HandoverEnv env(data, cfg, {}, 2);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> act(0, 2);
    env.reset();
    while (!env.done()) {
      const auto r = env.step(act(rng));
      CHECK(r.reward >= -1.9 - 1e-12);
      CHECK(r.reward <= 1.95 + 1e-12);
    }
  }
}

TEST_SUITE("termination") {
  const std::vector<Event> pp = {{3, EventKind::PingPong, 1, 0}};
  const std::vector<Event> rlf = {{3, EventKind::Rlf, 1, -1}};

  TEST_CASE("phase 1 ignores ping-pong, phase 2 stops on it") {
    EnvConfig c;
    CHECK_FALSE(check_termination(pp, 10, false, c).terminated);
    c.phase = 2;
    CHECK(check_termination(pp, 10, false, c).terminated);
  }

  TEST_CASE("RLF terminates in both phases") {
    EnvConfig c;
    CHECK(check_termination(rlf, 10, false, c).terminated);
    c.phase = 2;
    CHECK(check_termination(rlf, 10, false, c).terminated);
  }

  TEST_CASE("horizon and trace end truncate") {
    EnvConfig c;
    c.max_episode_ticks = 50;
    auto t = check_termination({}, 50, false, c);
    CHECK(t.truncated);
    CHECK_FALSE(t.terminated);
    CHECK(check_termination({}, 20, true, c).truncated);
    CHECK_FALSE(check_termination({}, 20, false, c).truncated);
  }

  TEST_CASE("evaluation never terminates early") {
    EnvConfig c;
    c.evaluation = true;
    c.phase = 2;
    CHECK_FALSE(check_termination(rlf, 10, false, c).terminated);
    CHECK_FALSE(check_termination(pp, 10, false, c).terminated);
  }
}

TEST_SUITE("episodes") {
  TEST_CASE("single-trace reset picks the strongest cell") {
    auto t = ho::test::make_trace({{1.0, 7.0, 3.0}, {1.0, 7.0, 3.0}});
    HandoverEnv env(dataset_of({t}), EnvConfig{}, {}, 1);
    const auto s = env.reset();
    CHECK(env.connection().serving == 1);
    CHECK(s.bs_onehot()[1] == 1.0);
  }

  TEST_CASE("staying on a single cell runs to the horizon") {
    auto t = ho::test::make_trace(std::vector<std::vector<double>>(300, {12.0}));
    EnvConfig cfg;
    cfg.max_episode_ticks = 120;
    HandoverEnv env(dataset_of({t}), cfg, {}, 1);
    env.reset();
    StepResult r;
    int steps = 0;
    do {
      r = env.step(0);
      ++steps;
      CHECK_FALSE(r.info.ho_prep_start);
    } while (!env.done());
    CHECK(steps == 120);
    CHECK(r.truncated);
    CHECK_FALSE(r.terminated);
    CHECK(env.episode_events().empty());
  }

  TEST_CASE("neighbour action at tick k: prep k, command k+5, completion k+9") {
    HandoverEnv env(dataset_of({steady_two_cell(100)}), EnvConfig{}, {}, 1);
    env.reset();
    const std::int64_t k = 20;
    for (std::int64_t t = 0; t < 60; ++t) env.step(t >= k ? 1 : 0);
    const auto& log = env.episode_events();
    CHECK(ticks_of(log, EventKind::HoPrepStart) == std::vector<std::int64_t>{k});
    CHECK(ticks_of(log, EventKind::HoCmd) == std::vector<std::int64_t>{k + 5});
    CHECK(ticks_of(log, EventKind::HoComplete) == std::vector<std::int64_t>{k + 9});
    CHECK(env.connection().serving == 1);
  }

  TEST_CASE("switching target mid-preparation restarts it in the same tick") {
    auto t = ho::test::make_trace(std::vector<std::vector<double>>(100, {8.0, 4.0, 4.0}));
    HandoverEnv env(dataset_of({t}), EnvConfig{}, {}, 1);
    env.reset();
    for (int i = 0; i < 10; ++i) env.step(0);
    env.step(1);  // tick 10
    env.step(1);
    env.step(2);  // tick 12
    for (int i = 0; i < 20; ++i) env.step(2);
    const auto& log = env.episode_events();
    REQUIRE(log.size() >= 4);
    CHECK(log[0] == Event{10, EventKind::HoPrepStart, 0, 1});
    CHECK(log[1] == Event{12, EventKind::HoAbort, 0, 1});
    CHECK(log[2] == Event{12, EventKind::HoPrepStart, 0, 2});
    CHECK(ticks_of(log, EventKind::HoCmd) == std::vector<std::int64_t>{17});
  }

  TEST_CASE("returning to the serving cell during preparation aborts it") {
    HandoverEnv env(dataset_of({steady_two_cell(60)}), EnvConfig{}, {}, 1);
    env.reset();
    env.step(1);  // preparation starts at tick 0
    std::vector<Event> log;
    for (int i = 0; i < 12; ++i) {
      const auto r = env.step(0);
      log.insert(log.end(), r.info.events.begin(), r.info.events.end());
    }
    CHECK(ticks_of(log, EventKind::HoAbort) == std::vector<std::int64_t>{1});
    CHECK(ticks_of(log, EventKind::HoCmd).empty());
    CHECK(ticks_of(log, EventKind::HoPrepStart).empty());
    CHECK(env.connection().serving == 0);
  }

  TEST_CASE("actions during execution are ignored") {
    HandoverEnv env(dataset_of({steady_two_cell(60)}), EnvConfig{}, {}, 1);
    env.reset();
    for (int i = 0; i < 6; ++i) env.step(1);  // command at tick 5
    REQUIRE(env.connection().executing());
    const auto r = env.step(0);
    CHECK(r.info.action_ignored);
    CHECK(r.info.events.empty());
  }

  TEST_CASE("pp flag stays up for exactly MTS after completion") {
    HandoverEnv env(dataset_of({steady_two_cell(400)}), EnvConfig{}, {}, 1);
    auto s = env.reset();
    std::int64_t completed = -1;
    int flagged = 0;
    for (std::int64_t t = 0; t < 300; ++t) {
      const auto r = env.step(1);
      if (r.info.ho_complete) completed = t;
      if (r.next_state.pp_flag() == 1.0) ++flagged;
    }
    REQUIRE(completed == 9);
    const int window = static_cast<int>(std::ceil(1000.0 / 10.0));
    int open = 0;
    for (std::int64_t t = completed; t < 300; ++t) open += ho::protocol::pp_window_open(env.connection(), t, {}) ? 1 : 0;
    CHECK(open == window);
    // The completion tick itself was observed before the HO finished, so the
    // flag is visible on the window's remaining ticks.
    CHECK(flagged == window - 1);
  }

  TEST_CASE("reset is a function of seed and episode index") {
    std::vector<ho::channel::RawTrace> traces;
    for (std::uint64_t i = 0; i < 6; ++i) traces.push_back(ho::test::random_trace(50, 4, i + 1));
    auto data = dataset_of(traces);
    EnvConfig cfg;
    cfg.shuffle_bs = true;
    HandoverEnv a(data, cfg, {}, 42), b(data, cfg, {}, 42);
    std::vector<std::size_t> picks;
    for (int e = 0; e < 20; ++e) {
      CHECK(a.reset() == b.reset());
      CHECK(a.trace_index() == b.trace_index());
      CHECK(a.permutation() == b.permutation());
      picks.push_back(a.trace_index());
    }
    b.set_episode_index(3);
    a.set_episode_index(3);
    CHECK(a.reset() == b.reset());
    CHECK(std::set<std::size_t>(picks.begin(), picks.end()).size() > 1);
  }

  TEST_CASE("empty dataset and bad actions are errors") {
    CHECK_THROWS_AS(HandoverEnv(dataset_of({}), EnvConfig{}, {}, 1), EnvError);
    HandoverEnv env(dataset_of({steady_two_cell(10)}), EnvConfig{}, {}, 1);
    env.reset();
    CHECK_THROWS_AS(env.step(2), EnvError);
    CHECK_THROWS_AS(env.step(-1), EnvError);
  }
}

TEST_SUITE("permutation equivariance") {
  TEST_CASE("shuffled episode is the relabelled unshuffled episode") {
    const std::size_t n = 4;
    const auto trace = ho::test::random_trace(1500, n, 99, -14.0, 14.0);
    auto data = dataset_of({trace});
    EnvConfig cfg;
    cfg.evaluation = true;
    const std::vector<int> identity = {0, 1, 2, 3};
    const std::vector<int> perm = {2, 0, 3, 1};  // perm[canonical] = observed

    HandoverEnv plain(data, cfg, {}, 1), shuffled(data, cfg, {}, 1);
    auto s0 = plain.reset_to(0, identity);
    auto s1 = shuffled.reset_to(0, perm);

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> act(0, static_cast<int>(n) - 1);
    std::vector<double> r0, r1;
    int a = 0;
    for (int t = 0; !plain.done(); ++t) {
      // Observations agree after relabelling the BS blocks.
      for (std::size_t b = 0; b < n; ++b) {
        const auto o = static_cast<std::size_t>(perm[b]);
        CHECK(s1.bs_onehot()[o] == s0.bs_onehot()[b]);
        CHECK(s1.sinr_scaled()[o] == s0.sinr_scaled()[b]);
      }
      CHECK(s1.pp_flag() == s0.pp_flag());

      // Hold each random choice long enough for handovers to complete.
      if (t % 40 == 0) a = act(rng);
      const auto x0 = plain.step(a);
      const auto x1 = shuffled.step(perm[static_cast<std::size_t>(a)]);
      r0.push_back(x0.reward);
      r1.push_back(x1.reward);
      s0 = x0.next_state;
      s1 = x1.next_state;
    }
    CHECK(shuffled.done());
    CHECK(r0 == r1);
    // Logs are kept in canonical indices, so they match exactly.
    CHECK(plain.episode_events() == shuffled.episode_events());
    CHECK(plain.serving_timeline() == shuffled.serving_timeline());
    CHECK(ticks_of(plain.episode_events(), EventKind::HoComplete).size() > 0);
  }
}
