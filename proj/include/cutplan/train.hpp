#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutplan/core.hpp"
#include "cutplan/env.hpp"
#include "cutplan/errors.hpp"
#include "cutplan/explore.hpp"
#include "cutplan/net.hpp"

namespace cutplan {

struct OUSettings {
  double mu = 0.001;
  double theta = 0.15;
  double sigma = 0.2;
  double dt = 0.01;
  bool enabled = true;
};

// Each exploration stage (OU noise, epsilon override, amplitude sampler)
// can be switched off independently for ablation runs.
struct ExploreConfig {
  OUSettings ou;
  EpsilonSchedule eps;
  bool eps_enabled = true;
  bool amplitude_enabled = true;
};

struct StepRecord {
  std::vector<double> features;
  std::vector<double> probs_net;    // head output before any perturbation
  std::vector<double> probs_final;  // what decode_action consumed
  StepCache cache;
  Section executed;
  std::vector<std::uint8_t> selected;  // sizes in the executed marker
  std::vector<std::uint8_t> eligible;  // sizes with remaining demand pre-step
  double reward = 0.0;
  SampleMode mode = SampleMode::Exploit;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  double total_reward = 0.0;
};

// One full environment interaction cycle: features -> LSTM -> sigmoid head
// -> perturb -> decode -> step, until fulfillment or the step cap.
inline EpisodeTrace run_episode(const Order& order, const PolicyParams& params,
                                const ExploreConfig& explore, double epsilon,
                                const EnvConfig& env_cfg, std::mt19937_64& rng) {
  validate_order(order);
  validate_schedule(explore.eps);
  const int n = order.size_count();
  if (env_cfg.max_steps < n)
    throw ValidationError("env: max_steps must be at least the number of sizes");
  if (params.dims().input != n || params.dims().output != n)
    throw DimensionError("run_episode: network dims do not match the order");

  EnvState state = reset(order);
  NetState net = NetState::zeros(params.dims());
  OUState ou = explore.ou.enabled
                   ? make_ou_state(n, explore.ou.mu, explore.ou.theta, explore.ou.sigma,
                                   explore.ou.dt)
                   : OUState{std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  const double eps_eff = explore.eps_enabled ? epsilon : 0.0;

  EpisodeTrace trace;
  while (!fulfilled(state) && state.step_index < env_cfg.max_steps) {
    StepRecord rec;
    rec.features = state_features(state, order);
    auto [next_net, cache] = lstm_forward(rec.features, net, params);
    rec.probs_net = head_forward(next_net.h, params);
    if (explore.ou.enabled) ou = ou_step(ou, rng);
    PerturbResult pr =
        perturb_and_select(rec.probs_net, eps_eff, ou, rng, explore.amplitude_enabled);
    rec.probs_final = std::move(pr.probs);
    rec.mode = pr.mode;
    rec.eligible.resize(n);
    for (int s = 0; s < n; ++s) rec.eligible[s] = state.remaining[s] > 0 ? 1 : 0;
    Section section = decode_action(rec.probs_final, state, order);
    StepOutcome out = step(state, section, order, env_cfg);
    rec.executed = out.executed;
    rec.selected.resize(n);
    for (int s = 0; s < n; ++s) rec.selected[s] = out.executed.counts[s] > 0 ? 1 : 0;
    rec.reward = out.reward;
    rec.cache = StepCache{std::move(cache), rec.probs_net};
    trace.total_reward += out.reward;
    trace.steps.push_back(std::move(rec));
    state = std::move(out.next_state);
    net = std::move(next_net);
    if (out.done) break;
  }
  return trace;
}

// Discounted returns, G_t = r_t + gamma * G_{t+1}.
inline std::vector<double> returns(const EpisodeTrace& trace, double gamma) {
  std::vector<double> g(trace.steps.size(), 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(trace.steps.size()) - 1; t >= 0; --t) {
    acc = trace.steps[t].reward + gamma * acc;
    g[t] = acc;
  }
  return g;
}

struct PolicyLossResult {
  double loss = 0.0;
  std::vector<std::vector<double>> dloss_dprobs;
};

// REINFORCE loss under an independent-Bernoulli action model over the
// eligible sizes: log pi = sum_selected log p + sum_eligible-unselected
// log(1-p), weighted by the advantage G_t - baseline. Probabilities are
// clamped away from {0,1} before the log; a binding clamp zeroes the
// gradient for that coordinate.
inline PolicyLossResult policy_loss(const EpisodeTrace& trace, std::span<const double> rets,
                                    double baseline, bool logpi_on_final = false) {
  if (trace.steps.size() != rets.size())
    throw DimensionError("policy_loss: trace and returns are not aligned");
  constexpr double kLo = 1e-7;
  constexpr double kHi = 1.0 - 1e-7;
  PolicyLossResult out;
  out.dloss_dprobs.resize(trace.steps.size());
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const StepRecord& rec = trace.steps[t];
    const std::vector<double>& probs = logpi_on_final ? rec.probs_final : rec.probs_net;
    const double adv = rets[t] - baseline;
    std::vector<double>& dp = out.dloss_dprobs[t];
    dp.assign(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!rec.eligible[i]) continue;
      const double p = std::clamp(probs[i], kLo, kHi);
      const bool clamped = probs[i] < kLo || probs[i] > kHi;
      if (rec.selected[i]) {
        out.loss -= adv * std::log(p);
        if (!clamped) dp[i] = -adv / p;
      } else {
        out.loss -= adv * std::log(1.0 - p);
        if (!clamped) dp[i] = adv / (1.0 - p);
      }
    }
  }
  return out;
}

struct RunningStat {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
};

// Running (or sliding-window) standardization statistics for returns.
class ReturnNormalizer {
 public:
  explicit ReturnNormalizer(long long window = 0) : window_(window) {}

  void add(double v) {
    if (window_ <= 0) {
      cumulative_.add(v);
      return;
    }
    buffer_.push_back(v);
    sum_ += v;
    sum_sq_ += v * v;
    if (static_cast<long long>(buffer_.size()) > window_) {
      const double old = buffer_.front();
      buffer_.pop_front();
      sum_ -= old;
      sum_sq_ -= old * old;
    }
  }
  long long count() const {
    return window_ <= 0 ? cumulative_.n : static_cast<long long>(buffer_.size());
  }
  double mean() const {
    if (window_ <= 0) return cumulative_.mean;
    return buffer_.empty() ? 0.0 : sum_ / static_cast<double>(buffer_.size());
  }
  double stddev() const {
    if (window_ <= 0) return cumulative_.stddev();
    if (buffer_.empty()) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sum_sq_ / static_cast<double>(buffer_.size()) - m * m));
  }

 private:
  long long window_;
  std::deque<double> buffer_;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  RunningStat cumulative_;
};

struct TrainConfig {
  int episodes = 1000;
  double gamma = 0.99;
  double lr = 0.001;
  std::uint64_t seed = 0;
  EnvConfig env;
  ExploreConfig explore;
  long long norm_window = 0;      // 0: standardize against the full history
  bool logpi_on_final = false;    // ablation: score the perturbed vector instead
  int hidden = 64;
};

struct MetricsRow {
  int episode = 0;
  double total_reward = 0.0;
  double loss = 0.0;
  double epsilon = 0.0;
  int steps = 0;
};

struct TrainMetrics {
  std::vector<MetricsRow> rows;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams best_params;
  int best_episode = -1;
  double best_reward = 0.0;
  TrainMetrics metrics;
  AdamState adam;
  std::mt19937_64 rng;
};

// Policy-gradient training: per episode, roll out, discount, standardize the
// returns (std floored at 1e-8), subtract the running-mean baseline, BPTT,
// Adam. The parameters that produced the best episode reward are kept
// alongside the final ones.
inline TrainResult train(const Order& order, const TrainConfig& cfg) {
  validate_order(order);
  if (cfg.episodes < 1) throw ValidationError("train: episodes must be >= 1");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    throw ValidationError("train: gamma must lie in [0,1]");

  std::mt19937_64 rng(cfg.seed);
  const NetDims dims{order.size_count(), cfg.hidden, order.size_count()};
  PolicyParams params = glorot_init(dims, rng);
  PolicyParams best = params;
  int best_episode = -1;
  double best_reward = -std::numeric_limits<double>::infinity();
  AdamState adam(dims);
  ReturnNormalizer normalizer(cfg.norm_window);
  RunningStat baseline_stat;
  TrainMetrics metrics;
  metrics.rows.reserve(static_cast<std::size_t>(cfg.episodes));

  for (int k = 0; k < cfg.episodes; ++k) {
    const double eps = epsilon_at(cfg.explore.eps, k);
    EpisodeTrace trace = run_episode(order, params, cfg.explore, eps, cfg.env, rng);
    std::vector<double> g = returns(trace, cfg.gamma);
    for (double v : g) normalizer.add(v);
    const double mean = normalizer.mean();
    const double sd = std::max(normalizer.stddev(), 1e-8);
    std::vector<double> g_norm(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) g_norm[t] = (g[t] - mean) / sd;

    const double baseline = baseline_stat.n > 0 ? baseline_stat.mean : 0.0;
    PolicyLossResult pl = policy_loss(trace, g_norm, baseline, cfg.logpi_on_final);
    if (!std::isfinite(pl.loss))
      throw NumericError("train: non-finite loss at episode " + std::to_string(k) +
                         " (seed " + std::to_string(cfg.seed) + ")");
    if (!g_norm.empty()) baseline_stat.add(g_norm[0]);

    if (trace.total_reward > best_reward) {
      best_reward = trace.total_reward;
      best = params;
      best_episode = k;
    }

    std::vector<StepCache> caches;
    caches.reserve(trace.steps.size());
    for (const StepRecord& rec : trace.steps) caches.push_back(rec.cache);
    ParamGrads grads = episode_backward(caches, pl.dloss_dprobs, params);
    adam_step(params, grads, adam, cfg.lr);

    metrics.rows.push_back(
        {k, trace.total_reward, pl.loss, eps, static_cast<int>(trace.steps.size())});
  }
  return TrainResult{std::move(params), std::move(best),     best_episode, best_reward,
                     std::move(metrics), std::move(adam),     rng};
}

struct EvalRollout {
  int steps = 0;
  int sections = 0;
  bool feasible_exact = false;
  double waste_yards = 0.0;
  double total_reward = 0.0;
};

struct EvalReport {
  std::vector<EvalRollout> rollouts;
  double feasible_fraction = 0.0;
  double mean_sections = 0.0;
  double mean_reward = 0.0;
};

struct RolloutResult {
  CutPlan plan;
  double total_reward = 0.0;
  int steps = 0;
};

// One pure-exploit rollout: eps = 0, noise and amplitude stages off, so the
// decoded plan is a deterministic function of the parameters.
inline RolloutResult exploit_rollout(const Order& order, const PolicyParams& params,
                                     const EnvConfig& env_cfg) {
  validate_order(order);
  if (params.dims().input != order.size_count() || params.dims().output != order.size_count())
    throw DimensionError("exploit_rollout: network dims do not match the order");
  EnvState state = reset(order);
  NetState net = NetState::zeros(params.dims());
  RolloutResult result;
  while (!fulfilled(state) && state.step_index < env_cfg.max_steps) {
    const std::vector<double> feats = state_features(state, order);
    auto [next_net, cache] = lstm_forward(feats, net, params);
    const std::vector<double> probs = head_forward(next_net.h, params);
    Section section = decode_action(probs, state, order);
    StepOutcome out = step(state, section, order, env_cfg);
    result.plan.sections.push_back(out.executed);
    result.total_reward += out.reward;
    state = std::move(out.next_state);
    net = std::move(next_net);
    if (out.done) break;
  }
  result.steps = state.step_index;
  return result;
}

inline EvalReport evaluate(const Order& order, const PolicyParams& params, int episodes,
                           const EnvConfig& env_cfg) {
  EvalReport report;
  long long feasible = 0;
  for (int e = 0; e < episodes; ++e) {
    const RolloutResult rollout = exploit_rollout(order, params, env_cfg);
    EvalRollout roll;
    roll.total_reward = rollout.total_reward;
    roll.steps = rollout.steps;
    roll.sections = static_cast<int>(rollout.plan.sections.size());
    const PlanReport pr = validate_plan(rollout.plan, order);
    roll.feasible_exact = pr.feasible_exact;
    roll.waste_yards = waste(rollout.plan, order);
    feasible += roll.feasible_exact ? 1 : 0;
    report.mean_sections += roll.sections;
    report.mean_reward += roll.total_reward;
    report.rollouts.push_back(roll);
  }
  if (episodes > 0) {
    report.feasible_fraction = static_cast<double>(feasible) / episodes;
    report.mean_sections /= episodes;
    report.mean_reward /= episodes;
  }
  return report;
}

// A recorded episode with actions and advantages frozen, so the policy loss
// becomes a deterministic differentiable function of the parameters alone.
struct FrozenEpisode {
  std::vector<std::vector<double>> features;
  std::vector<std::vector<std::uint8_t>> selected;
  std::vector<std::vector<std::uint8_t>> eligible;
  std::vector<double> advantages;

  double loss(const PolicyParams& params) const { return eval(params, nullptr); }

  std::pair<double, ParamGrads> loss_with_grads(const PolicyParams& params) const {
    ParamGrads grads(params.dims());
    const double l = eval(params, &grads);
    return {l, std::move(grads)};
  }

 private:
  double eval(const PolicyParams& params, ParamGrads* grads_out) const {
    constexpr double kLo = 1e-7;
    constexpr double kHi = 1.0 - 1e-7;
    NetState net = NetState::zeros(params.dims());
    std::vector<StepCache> caches;
    std::vector<std::vector<double>> dprobs;
    double total = 0.0;
    for (std::size_t t = 0; t < features.size(); ++t) {
      auto [next_net, cache] = lstm_forward(features[t], net, params);
      std::vector<double> probs = head_forward(next_net.h, params);
      std::vector<double> dp(probs.size(), 0.0);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!eligible[t][i]) continue;
        const double p = std::clamp(probs[i], kLo, kHi);
        const bool clamp_bound = probs[i] < kLo || probs[i] > kHi;
        if (selected[t][i]) {
          total -= advantages[t] * std::log(p);
          if (!clamp_bound) dp[i] = -advantages[t] / p;
        } else {
          total -= advantages[t] * std::log(1.0 - p);
          if (!clamp_bound) dp[i] = advantages[t] / (1.0 - p);
        }
      }
      if (grads_out) {
        caches.push_back(StepCache{std::move(cache), std::move(probs)});
        dprobs.push_back(std::move(dp));
      }
      net = std::move(next_net);
    }
    if (grads_out) *grads_out = episode_backward(caches, dprobs, params);
    return total;
  }
};

inline FrozenEpisode freeze_episode(const Order& order, const PolicyParams& params,
                                    const ExploreConfig& explore, double epsilon,
                                    const EnvConfig& env_cfg, int max_record, double gamma,
                                    std::mt19937_64& rng) {
  EpisodeTrace trace = run_episode(order, params, explore, epsilon, env_cfg, rng);
  const std::vector<double> g = returns(trace, gamma);
  double mean = 0.0;
  for (double v : g) mean += v;
  if (!g.empty()) mean /= static_cast<double>(g.size());
  FrozenEpisode frozen;
  const std::size_t count = std::min<std::size_t>(trace.steps.size(),
                                                  static_cast<std::size_t>(max_record));
  for (std::size_t t = 0; t < count; ++t) {
    frozen.features.push_back(trace.steps[t].features);
    frozen.selected.push_back(trace.steps[t].selected);
    frozen.eligible.push_back(trace.steps[t].eligible);
    frozen.advantages.push_back(g[t] - mean);
  }
  return frozen;
}

struct GradcheckReport {
  double max_rel_error = 0.0;
  int probes = 0;
  double fd_eps = 0.0;
};

// End-to-end gradient verification: a seeded episode on the sample order is
// frozen at three steps and the BPTT gradient is compared against central
// finite differences on randomly probed coordinates.
inline GradcheckReport run_gradcheck(std::uint64_t seed, int probes = 200,
                                     double fd_eps = 1e-5) {
  const Order order = sample_order();
  std::mt19937_64 rng(seed);
  const NetDims dims{order.size_count(), 64, order.size_count()};
  PolicyParams params = glorot_init(dims, rng);
  const ExploreConfig explore;
  const FrozenEpisode frozen =
      freeze_episode(order, params, explore, 0.5, EnvConfig{}, 3, 0.99, rng);
  const auto [base_loss, analytic] = frozen.loss_with_grads(params);
  (void)base_loss;
  GradcheckReport report;
  report.probes = probes;
  report.fd_eps = fd_eps;
  report.max_rel_error = finite_diff_check(
      params, [&](const PolicyParams& p) { return frozen.loss(p); }, analytic.flat(), probes,
      fd_eps, rng);
  return report;
}

}  // namespace cutplan
