// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "chronoalign/experiment.hpp"
#include "test_support.hpp"

using namespace chronoalign;
using testsupport::forced_episode;

namespace {

const ActionSpec& action(char id) {
  static const auto acts = default_actions();
  return acts[static_cast<std::size_t>(id - 'A')];
}

}  // namespace

TEST_CASE("start samples inside bounds, deterministically") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto e = Episode::start(action('A'), seed, {});
    const double t = EpisodeTestAccess::t_true(e);
    CHECK(action('A').bounds.contains(t));
    CHECK(t == EpisodeTestAccess::t_true(Episode::start(action('A'), seed, {})));
  }
}

TEST_CASE("move budget below two is rejected") {
  ClockConfig c;
  c.move_budget = 1;
  CHECK_THROWS_AS(c.validate(), ParameterDomainError);
  CHECK_THROWS_AS(Episode::start(action('A'), 1, c), ParameterDomainError);
}

TEST_CASE("sleep past the hidden time then check") {
  auto e = forced_episode(action('C'), 55.0);
  CHECK(e.step(make_sleep(60.0)) == Observation::Slept);
  CHECK(e.step(Check{}) == Observation::Done);
  const auto r = e.finish();
  CHECK(r.n_check == 1);
  CHECK(r.t_confirm == 60.0);
  CHECK(r.total_sleep_s == 60.0);
}

TEST_CASE("immediate check is pending") {
  auto e = forced_episode(action('C'), 55.0);
  CHECK(e.step(Check{}) == Observation::Pending);
  CHECK(e.elapsed_s() == 0.0);
  CHECK(e.status() == EpisodeStatus::Running);
}

TEST_CASE("polling every ten seconds") {
  auto e = forced_episode(action('A'), 35.0);
  int checks = 0;
  Observation obs = Observation::Pending;
  while (obs != Observation::Done) {
    e.step(make_sleep(10.0));
    obs = e.step(Check{});
    ++checks;
  }
  CHECK(checks == 4);
  CHECK(e.elapsed_s() == 40.0);
  const auto r = e.finish();
  CHECK(r.t_true == 35.0);
  CHECK(r.t_confirm == 40.0);
  CHECK(r.n_check == 4);
  CHECK(r.total_sleep_s == 40.0);
  CHECK(r.moves.size() == 8);
  CHECK(regret(r) == doctest::Approx(4.0 * std::exp(1.0 / 7.0)).epsilon(1e-12));
}

TEST_CASE("oracle trace confirms at the hidden time") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto e = Episode::start(action('B'), seed, {});
    const auto r = testsupport::run_oracle(e);
    CHECK(r.t_confirm == r.t_true);
    CHECK(regret(r) == 1.0);
  }
}

TEST_CASE("closed and non-finalizable episodes") {
  auto e = forced_episode(action('A'), 30.0);
  CHECK_THROWS_AS(e.finish(), NotFinalizableError);
  CHECK_THROWS_AS(e.aborted_summary(), NotFinalizableError);
  e.step(make_sleep(31.0));
  e.step(Check{});
  CHECK_THROWS_AS(e.step(Check{}), EpisodeClosedError);
  CHECK_THROWS_AS(e.abort(), EpisodeClosedError);
  CHECK_THROWS_AS(e.aborted_summary(), NotFinalizableError);

  auto f = forced_episode(action('A'), 30.0);
  f.abort();
  CHECK(f.status() == EpisodeStatus::Aborted);
  CHECK_THROWS_AS(f.finish(), NotFinalizableError);
  CHECK_THROWS_AS(f.step(Check{}), EpisodeClosedError);
}

TEST_CASE("budget exhaustion aborts") {
  ClockConfig c;
  c.move_budget = 4;
  auto e = forced_episode(action('A'), 40.0, c);
  for (int i = 0; i < 4; ++i) e.step(i % 2 ? Move{Check{}} : make_sleep(1.0));
  CHECK_THROWS_AS(e.step(Check{}), BudgetExceededError);
  CHECK(e.status() == EpisodeStatus::Aborted);
  const auto a = e.aborted_summary();
  CHECK(a.moves.size() == 4);
  CHECK(a.n_check == 2);
  CHECK(a.clock_s == 2.0);
}

TEST_CASE("non-positive sleeps are rejected") {
  CHECK_THROWS_AS(make_sleep(0.0), ParameterDomainError);
  CHECK_THROWS_AS(make_sleep(-3.0), ParameterDomainError);
  CHECK_THROWS_AS(make_sleep(NAN), ParameterDomainError);
  auto e = forced_episode(action('A'), 30.0);
  CHECK_THROWS_AS(e.step(Sleep{-1.0}), ParameterDomainError);
  CHECK(e.log().empty());
}

TEST_CASE("generation latency is charged before every move") {
  ClockConfig c;
  c.gen_latency.fixed_s = 2.0;
  auto e = forced_episode(action('A'), 35.0, c);
  e.step(make_sleep(30.0));
  CHECK(e.elapsed_s() == 32.0);
  CHECK(e.step(Check{}) == Observation::Pending);
  CHECK(e.elapsed_s() == 34.0);
  CHECK(e.step(Check{}) == Observation::Done);
  const auto r = e.finish();
  CHECK(r.t_confirm == 36.0);
  CHECK(r.total_sleep_s == 30.0);
}

TEST_CASE("latency jitter is bounded and leaves the hidden time alone") {
  ClockConfig plain, jittery;
  jittery.gen_latency = {1.0, 0.5};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = Episode::start(action('A'), seed, plain);
    auto b = Episode::start(action('A'), seed, jittery);
    CHECK(EpisodeTestAccess::t_true(a) == EpisodeTestAccess::t_true(b));
    b.step(Check{});
    CHECK(b.elapsed_s() >= 1.0);
    CHECK(b.elapsed_s() <= 1.5);
  }
}

TEST_CASE("wall clock really waits and uses the measured latency") {
  ClockConfig c;
  c.mode = ClockMode::Wall;
  c.gen_latency.fixed_s = 100.0;
  auto e = forced_episode(action('A'), 0.05, c);
  const auto t0 = std::chrono::steady_clock::now();
  e.step(make_sleep(0.05), 0.01);
  const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(waited >= 0.05);
  CHECK(e.elapsed_s() == doctest::Approx(0.06));
  CHECK(e.step(Check{}, 0.0) == Observation::Done);
}
