#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cutplan/baselines.hpp"
#include "cutplan/train.hpp"
#include "helpers.hpp"

using namespace cutplan;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testutil::uniform_order;

namespace {

EpisodeTrace single_step_trace(int selected_count) {
  EpisodeTrace trace;
  StepRecord rec;
  rec.probs_net.assign(6, 0.5);
  rec.probs_final = rec.probs_net;
  rec.eligible.assign(6, 1);
  rec.selected.assign(6, 0);
  for (int i = 0; i < selected_count; ++i) rec.selected[i] = 1;
  rec.reward = 1.0;
  trace.steps.push_back(std::move(rec));
  trace.total_reward = 1.0;
  return trace;
}

}  // namespace

TEST_CASE("returns implements the discounted recursion") {
  EpisodeTrace trace;
  auto with_rewards = [](std::vector<double> rewards) {
    EpisodeTrace t;
    for (double r : rewards) {
      StepRecord rec;
      rec.reward = r;
      t.steps.push_back(std::move(rec));
    }
    return t;
  };
  CHECK(returns(with_rewards({1, 1, 1}), 0.0) == std::vector<double>{1, 1, 1});
  CHECK(returns(with_rewards({0, 0, 1}), 0.5) == std::vector<double>{0.25, 0.5, 1});
  CHECK(returns(with_rewards({0, 0, 0}), 0.9) == std::vector<double>{0, 0, 0});
  CHECK(returns(with_rewards({}), 0.9).empty());
}

TEST_CASE("policy_loss vanishes at zero advantage") {
  const EpisodeTrace trace = single_step_trace(3);
  const PolicyLossResult result = policy_loss(trace, std::vector<double>{0.7}, 0.7);
  CHECK(result.loss == 0.0);
  for (double g : result.dloss_dprobs[0]) CHECK(g == 0.0);
}

TEST_CASE("policy_loss on the six-way bernoulli example") {
  const EpisodeTrace trace = single_step_trace(3);
  const PolicyLossResult result = policy_loss(trace, std::vector<double>{1.0}, 0.0);
  CHECK_THAT(result.loss, WithinRel(-6.0 * std::log(0.5), 1e-12));  // ~4.1589
  for (int i = 0; i < 6; ++i)
    CHECK_THAT(result.dloss_dprobs[0][i], WithinRel(i < 3 ? -2.0 : 2.0, 1e-12));
}

TEST_CASE("policy_loss is linear in the advantage") {
  const EpisodeTrace trace = single_step_trace(2);
  const PolicyLossResult one = policy_loss(trace, std::vector<double>{1.0}, 0.0);
  const PolicyLossResult two = policy_loss(trace, std::vector<double>{2.0}, 0.0);
  CHECK_THAT(two.loss, WithinRel(2.0 * one.loss, 1e-12));
  for (int i = 0; i < 6; ++i)
    CHECK_THAT(two.dloss_dprobs[0][i], WithinAbs(2.0 * one.dloss_dprobs[0][i], 1e-12));
}

TEST_CASE("policy_loss clamps probabilities at the bounds") {
  EpisodeTrace trace = single_step_trace(1);
  trace.steps[0].probs_net = {1.0, 0.0, 0.5, 0.5, 0.5, 0.5};
  const PolicyLossResult result = policy_loss(trace, std::vector<double>{1.0}, 0.0);
  CHECK(std::isfinite(result.loss));
  CHECK(result.dloss_dprobs[0][0] == 0.0);  // clamp bound, gradient dropped
  CHECK(result.dloss_dprobs[0][1] == 0.0);
}

TEST_CASE("policy_loss ignores ineligible sizes") {
  EpisodeTrace trace = single_step_trace(1);
  trace.steps[0].eligible = {1, 0, 0, 0, 0, 0};
  const PolicyLossResult result = policy_loss(trace, std::vector<double>{1.0}, 0.0);
  CHECK_THAT(result.loss, WithinRel(-std::log(0.5), 1e-12));
  for (int i = 1; i < 6; ++i) CHECK(result.dloss_dprobs[0][i] == 0.0);
}

TEST_CASE("policy_loss checks alignment") {
  const EpisodeTrace trace = single_step_trace(1);
  CHECK_THROWS_AS(policy_loss(trace, std::vector<double>{1.0, 2.0}, 0.0), DimensionError);
}

TEST_CASE("run_episode terminates within the size bound and is exact") {
  const Order order = sample_order();
  std::mt19937_64 rng(21);
  const NetDims dims{6, 64, 6};
  const PolicyParams params = glorot_init(dims, rng);
  const ExploreConfig explore;

  for (double eps : {1.0, 0.5, 0.0}) {
    const EpisodeTrace trace = run_episode(order, params, explore, eps, EnvConfig{}, rng);
    CHECK(trace.steps.size() <= 6);
    CutPlan plan;
    for (const StepRecord& rec : trace.steps) plan.sections.push_back(rec.executed);
    CHECK(validate_plan(plan, order).feasible_exact);
    CHECK(trace.total_reward > 0.0);
    CHECK(trace.total_reward <= 1.0 + 1e-12);
  }
}

TEST_CASE("run_episode on a zero-demand order records nothing") {
  const Order order = uniform_order({0, 0}, 9.0);
  std::mt19937_64 rng(1);
  const PolicyParams params(NetDims{2, 4, 2});
  const EpisodeTrace trace = run_episode(order, params, ExploreConfig{}, 1.0, EnvConfig{}, rng);
  CHECK(trace.steps.empty());
  CHECK(trace.total_reward == 0.0);
}

TEST_CASE("run_episode is bit-reproducible under a fixed seed") {
  const Order order = sample_order();
  const NetDims dims{6, 64, 6};
  std::mt19937_64 init_rng(3);
  const PolicyParams params = glorot_init(dims, init_rng);
  std::mt19937_64 rng_a(55), rng_b(55);
  const EpisodeTrace a = run_episode(order, params, ExploreConfig{}, 0.7, EnvConfig{}, rng_a);
  const EpisodeTrace b = run_episode(order, params, ExploreConfig{}, 0.7, EnvConfig{}, rng_b);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.total_reward == b.total_reward);
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    CHECK(a.steps[t].probs_net == b.steps[t].probs_net);
    CHECK(a.steps[t].probs_final == b.steps[t].probs_final);
    CHECK(a.steps[t].executed.counts == b.steps[t].executed.counts);
    CHECK(a.steps[t].reward == b.steps[t].reward);
  }
}

TEST_CASE("run_episode validates its configuration") {
  const Order order = sample_order();
  std::mt19937_64 rng(1);
  const PolicyParams params(NetDims{6, 8, 6});
  EnvConfig tight;
  tight.max_steps = 3;  // fewer than six sizes
  CHECK_THROWS_AS(run_episode(order, params, ExploreConfig{}, 0.5, tight, rng),
                  ValidationError);
  const PolicyParams wrong(NetDims{4, 8, 4});
  CHECK_THROWS_AS(run_episode(order, wrong, ExploreConfig{}, 0.5, EnvConfig{}, rng),
                  DimensionError);
}

TEST_CASE("train produces one metrics row per episode") {
  TrainConfig cfg;
  cfg.episodes = 1;
  cfg.seed = 5;
  const TrainResult result = train(sample_order(), cfg);
  REQUIRE(result.metrics.rows.size() == 1);
  CHECK(result.metrics.rows[0].episode == 0);
  CHECK(result.metrics.rows[0].epsilon == 1.0);
  CHECK(result.metrics.rows[0].steps <= 6);
  CHECK(result.best_episode == 0);
}

TEST_CASE("train is deterministic for a fixed seed") {
  TrainConfig cfg;
  cfg.episodes = 40;
  cfg.seed = 12;
  const TrainResult a = train(sample_order(), cfg);
  const TrainResult b = train(sample_order(), cfg);
  REQUIRE(a.metrics.rows.size() == b.metrics.rows.size());
  for (std::size_t k = 0; k < a.metrics.rows.size(); ++k) {
    CHECK(a.metrics.rows[k].total_reward == b.metrics.rows[k].total_reward);
    CHECK(a.metrics.rows[k].loss == b.metrics.rows[k].loss);
    CHECK(a.metrics.rows[k].epsilon == b.metrics.rows[k].epsilon);
    CHECK(a.metrics.rows[k].steps == b.metrics.rows[k].steps);
  }
  CHECK(std::vector<double>(a.params.flat().begin(), a.params.flat().end()) ==
        std::vector<double>(b.params.flat().begin(), b.params.flat().end()));
}

TEST_CASE("train matches the epsilon schedule and the step bound") {
  TrainConfig cfg;
  cfg.episodes = 60;
  cfg.seed = 4;
  const TrainResult result = train(sample_order(), cfg);
  const EpsilonSchedule schedule;
  for (const MetricsRow& row : result.metrics.rows) {
    CHECK(row.epsilon == epsilon_at(schedule, row.episode));
    CHECK(row.steps <= 6);
  }
}

TEST_CASE("constant-reward training keeps the loss at zero") {
  // A single-size order earns the same reward every episode, so the
  // standardized advantage, the loss and every gradient stay zero.
  TrainConfig cfg;
  cfg.episodes = 10;
  cfg.seed = 2;
  const TrainResult result = train(uniform_order({5}, 9.0), cfg);
  for (const MetricsRow& row : result.metrics.rows) CHECK(row.loss == 0.0);
}

TEST_CASE("zero-initialized parameters reproduce the greedy baseline") {
  const Order order = sample_order();
  const PolicyParams params(NetDims{6, 64, 6});  // all-zero weights: probs 0.5
  const RolloutResult rollout = exploit_rollout(order, params, EnvConfig{});
  const CutPlan greedy = greedy_plan(order);
  REQUIRE(rollout.plan.sections.size() == greedy.sections.size());
  for (std::size_t j = 0; j < greedy.sections.size(); ++j) {
    CHECK(rollout.plan.sections[j].plies == greedy.sections[j].plies);
    CHECK(rollout.plan.sections[j].counts == greedy.sections[j].counts);
  }
}

TEST_CASE("evaluate reports deterministic exploit rollouts") {
  const Order order = sample_order();
  std::mt19937_64 rng(6);
  const PolicyParams params = glorot_init(NetDims{6, 64, 6}, rng);
  const EvalReport a = evaluate(order, params, 10, EnvConfig{});
  const EvalReport b = evaluate(order, params, 10, EnvConfig{});
  REQUIRE(a.rollouts.size() == 10);
  CHECK(a.feasible_fraction == 1.0);
  CHECK(a.mean_sections <= 6.0);
  for (std::size_t e = 0; e < a.rollouts.size(); ++e) {
    CHECK(a.rollouts[e].total_reward == b.rollouts[e].total_reward);
    CHECK(a.rollouts[e].sections == b.rollouts[e].sections);
    CHECK(a.rollouts[e].waste_yards == 0.0);
  }
}

TEST_CASE("short training remains exact at evaluation time") {
  TrainConfig cfg;
  cfg.episodes = 120;
  cfg.seed = 9;
  const TrainResult result = train(sample_order(), cfg);
  const EvalReport report = evaluate(sample_order(), result.params, 20, cfg.env);
  CHECK(report.feasible_fraction == 1.0);
}

TEST_CASE("gradcheck stays under the tolerance") {
  const GradcheckReport report = run_gradcheck(7, 200);
  CHECK(report.probes == 200);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("frozen episodes give a deterministic loss") {
  const Order order = sample_order();
  std::mt19937_64 rng(31);
  const PolicyParams params = glorot_init(NetDims{6, 64, 6}, rng);
  const FrozenEpisode frozen =
      freeze_episode(order, params, ExploreConfig{}, 0.5, EnvConfig{}, 3, 0.99, rng);
  REQUIRE(frozen.features.size() == 3);
  CHECK(frozen.loss(params) == frozen.loss(params));
  const auto [loss, grads] = frozen.loss_with_grads(params);
  CHECK(loss == frozen.loss(params));
  bool any_nonzero = false;
  for (double g : grads.flat()) any_nonzero = any_nonzero || g != 0.0;
  CHECK(any_nonzero);
}

TEST_CASE("return normalizer windows and cumulative stats") {
  ReturnNormalizer cumulative(0);
  for (double v : {1.0, 2.0, 3.0, 4.0}) cumulative.add(v);
  CHECK_THAT(cumulative.mean(), WithinRel(2.5, 1e-12));
  CHECK_THAT(cumulative.stddev(), WithinRel(std::sqrt(1.25), 1e-12));

  ReturnNormalizer windowed(2);
  for (double v : {1.0, 2.0, 3.0, 4.0}) windowed.add(v);
  CHECK(windowed.count() == 2);
  CHECK_THAT(windowed.mean(), WithinRel(3.5, 1e-12));
  CHECK_THAT(windowed.stddev(), WithinRel(0.5, 1e-12));
}
