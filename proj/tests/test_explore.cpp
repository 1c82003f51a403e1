#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cutplan/explore.hpp"

using namespace cutplan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("ou drift with the volatility zeroed") {
  std::mt19937_64 rng(1);

  // From x = 0 one step drifts by theta*mu*dt.
  OUState at_zero = make_ou_state(1, 0.001, 0.15, 0.0, 0.01);
  at_zero.x[0] = 0.0;
  CHECK_THAT(ou_step(at_zero, rng).x[0], WithinRel(1.5e-6, 1e-12));

  // The long-term mean is a fixed point.
  const OUState at_mu = make_ou_state(3, 0.001, 0.15, 0.0, 0.01);
  const OUState stepped = ou_step(at_mu, rng);
  for (double x : stepped.x) CHECK(x == 0.001);
}

TEST_CASE("ou contraction toward the mean") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  OUState state = make_ou_state(4, 0.001, 0.15, 0.0, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    for (double& x : state.x) x = uniform(rng);
    const OUState next = ou_step(state, rng);
    for (std::size_t l = 0; l < state.x.size(); ++l) {
      const double before = std::abs(state.x[l] - state.mu);
      const double after = std::abs(next.x[l] - state.mu);
      CHECK_THAT(after, WithinRel((1.0 - state.theta * state.dt) * before, 1e-12));
      CHECK(after < before);
    }
  }
}

TEST_CASE("ou_reset restores the mean in every lane") {
  std::mt19937_64 rng(3);
  OUState state = make_ou_state(6);
  for (int t = 0; t < 100; ++t) state = ou_step(state, rng);
  const OUState fresh = ou_reset(state);
  CHECK(fresh.x == std::vector<double>(6, 0.001));
  const OUState again = ou_reset(ou_reset(state));
  CHECK(again.x == fresh.x);
}

TEST_CASE("ou parameter validation") {
  CHECK_THROWS_AS(make_ou_state(0), ValidationError);
  CHECK_THROWS_AS(make_ou_state(2, 0.0, 0.15, 0.2, 0.0), ValidationError);
  CHECK_THROWS_AS(make_ou_state(2, 0.0, 0.15, -0.1, 0.01), ValidationError);
  CHECK_THROWS_AS(make_ou_state(2, 0.0, 200.0, 0.2, 0.01), ValidationError);  // theta*dt >= 1
}

TEST_CASE("ou empirical moments match the closed form") {
  std::mt19937_64 rng(5);
  const OUState init = make_ou_state(6);  // paper parameters
  const OUStats stats = ou_empirical_stats(init, 100000, rng);
  CHECK(stats.samples == 600000);
  CHECK_THAT(stats.mean, WithinAbs(0.001, 0.01));
  CHECK_THAT(stats.stddev, WithinRel(ou_stationary_std(0.15, 0.2), 0.05));
  CHECK_THAT(stats.lag1, WithinAbs(ou_lag1_autocorr(0.15, 0.01), 0.01));
  CHECK_THAT(ou_stationary_std(0.15, 0.2), WithinAbs(0.36514837, 1e-7));
  CHECK(ou_lag1_autocorr(0.15, 0.01) == 1.0 - 0.15 * 0.01);
}

TEST_CASE("ou stats are seed-reproducible") {
  const OUState init = make_ou_state(2);
  std::mt19937_64 rng_a(77), rng_b(77);
  const OUStats a = ou_empirical_stats(init, 500, rng_a);
  const OUStats b = ou_empirical_stats(init, 500, rng_b);
  CHECK(a.mean == b.mean);
  CHECK(a.stddev == b.stddev);
  CHECK(a.lag1 == b.lag1);
}

TEST_CASE("epsilon schedule closed form") {
  const EpsilonSchedule schedule;
  CHECK(epsilon_at(schedule, 0) == 1.0);
  CHECK_THAT(epsilon_at(schedule, 1), WithinRel(0.995, 1e-15));
  CHECK(epsilon_at(schedule, 1000) == 0.1);

  double prev = 2.0;
  for (long long k = 0; k <= 1200; ++k) {
    const double eps = epsilon_at(schedule, k);
    CHECK(eps <= prev);
    CHECK(eps >= schedule.floor);
    CHECK(eps <= schedule.eps0);
    prev = eps;
  }
}

TEST_CASE("epsilon schedule validation") {
  CHECK_THROWS_AS(epsilon_at(EpsilonSchedule{}, -1), ValidationError);
  CHECK_THROWS_AS(validate_schedule(EpsilonSchedule{1.0, 1.5, 0.1}), ValidationError);
  CHECK_THROWS_AS(validate_schedule(EpsilonSchedule{0.5, 0.9, 0.7}), ValidationError);
}

TEST_CASE("to_amplitudes normalizes squares to one") {
  const Amplitudes identity = to_amplitudes(std::vector<double>{1, 0, 0, 0, 0, 0});
  CHECK(identity.probs() == std::vector<double>{1, 0, 0, 0, 0, 0});

  const Amplitudes pythagorean = to_amplitudes(std::vector<double>{3, 4});
  CHECK_THAT(pythagorean.probs()[0], WithinRel(0.36, 1e-12));
  CHECK_THAT(pythagorean.probs()[1], WithinRel(0.64, 1e-12));

  const Amplitudes uniform = to_amplitudes(std::vector<double>(5, 0.7));
  for (double p : uniform.probs()) CHECK_THAT(p, WithinRel(0.2, 1e-12));
}

TEST_CASE("to_amplitudes rejects degenerate input") {
  CHECK_THROWS_AS(to_amplitudes(std::vector<double>{0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(to_amplitudes(std::vector<double>{0.5, -0.1}), ValidationError);
}

TEST_CASE("amplitude probabilities sum to one and preserve the argmax") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uniform(0.0, 5.0);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> raw(dim(rng));
    for (double& v : raw) v = uniform(rng);
    raw[trial % raw.size()] += 1e-6;  // ensure some strictly positive entry
    const std::vector<double> probs = to_amplitudes(raw).probs();
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK_THAT(sum, WithinAbs(1.0, 1e-9));
    const auto raw_max = std::max_element(raw.begin(), raw.end()) - raw.begin();
    const auto probs_max = std::max_element(probs.begin(), probs.end()) - probs.begin();
    CHECK(raw_max == probs_max);
  }
}

TEST_CASE("perturb_and_select with eps 0 and zero noise is the identity") {
  std::mt19937_64 rng(4);
  OUState quiet = make_ou_state(3);
  std::fill(quiet.x.begin(), quiet.x.end(), 0.0);
  const std::vector<double> probs = {0.2, 0.9, 0.4};
  const PerturbResult result = perturb_and_select(probs, 0.0, quiet, rng);
  CHECK(result.probs == probs);
  CHECK(result.mode == SampleMode::Exploit);
}

TEST_CASE("perturb_and_select with eps 1 always explores") {
  std::mt19937_64 rng(4);
  const OUState noise = make_ou_state(3);
  const std::vector<double> probs = {0.2, 0.9, 0.4};
  for (int trial = 0; trial < 20; ++trial) {
    const PerturbResult result = perturb_and_select(probs, 1.0, noise, rng);
    CHECK(result.mode == SampleMode::Explore);
    for (double p : result.probs) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("perturb_and_select clamps at the probability bounds") {
  std::mt19937_64 rng(4);
  OUState high = make_ou_state(2);
  high.x = {0.2, -0.5};
  const PerturbResult result = perturb_and_select(std::vector<double>{0.9, 0.3}, 0.0, high, rng);
  CHECK(result.probs[0] == 1.0);
  CHECK(result.probs[1] == 0.0);
}

TEST_CASE("perturb_and_select renormalizes when the amplitude sampler is on") {
  std::mt19937_64 rng(4);
  OUState quiet = make_ou_state(3);
  std::fill(quiet.x.begin(), quiet.x.end(), 0.0);
  const std::vector<double> probs = {0.2, 0.9, 0.4};
  const PerturbResult result = perturb_and_select(probs, 0.0, quiet, rng, true);
  double sum = 0.0;
  for (double p : result.probs) sum += p;
  CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
  // Ranking is untouched: squares of a positive rescaling are monotone.
  CHECK(result.probs[1] > result.probs[2]);
  CHECK(result.probs[2] > result.probs[0]);
}

TEST_CASE("exploration sequences are seed-reproducible") {
  const OUState init = make_ou_state(4);
  const std::vector<double> probs = {0.1, 0.5, 0.9, 0.3};
  std::mt19937_64 rng_a(123), rng_b(123);
  OUState a = init, b = init;
  for (int t = 0; t < 50; ++t) {
    a = ou_step(a, rng_a);
    b = ou_step(b, rng_b);
    const PerturbResult ra = perturb_and_select(probs, 0.3, a, rng_a, true);
    const PerturbResult rb = perturb_and_select(probs, 0.3, b, rng_b, true);
    CHECK(ra.mode == rb.mode);
    CHECK(ra.probs == rb.probs);
  }
}
