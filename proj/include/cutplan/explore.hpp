#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cutplan/errors.hpp"

namespace cutplan {

// Mean-reverting exploration noise, one lane per action dimension.
struct OUState {
  std::vector<double> x;
  double mu = 0.001;
  double theta = 0.15;
  double sigma = 0.2;
  double dt = 0.01;
};

inline OUState make_ou_state(int lanes, double mu = 0.001, double theta = 0.15,
                             double sigma = 0.2, double dt = 0.01) {
  if (lanes <= 0) throw ValidationError("ou: lane count must be positive");
  if (!(dt > 0.0)) throw ValidationError("ou: dt must be positive");
  if (!(sigma >= 0.0)) throw ValidationError("ou: sigma must be non-negative");
  if (!(theta * dt > 0.0 && theta * dt < 1.0))
    throw ValidationError("ou: theta*dt must lie in (0,1)");
  return OUState{std::vector<double>(static_cast<std::size_t>(lanes), mu), mu, theta, sigma, dt};
}

// Euler-Maruyama step: x' = x + theta*(mu - x)*dt + sigma*sqrt(dt)*z.
inline OUState ou_step(const OUState& state, std::mt19937_64& rng) {
  OUState next = state;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = state.sigma * std::sqrt(state.dt);
  for (double& x : next.x) x += state.theta * (state.mu - x) * state.dt + scale * normal(rng);
  return next;
}

inline OUState ou_reset(const OUState& state) {
  OUState next = state;
  std::fill(next.x.begin(), next.x.end(), state.mu);
  return next;
}

// Closed-form moments of the discretized process, used by the stats command
// and the tests.
inline double ou_stationary_std(double theta, double sigma) {
  return sigma / std::sqrt(2.0 * theta);
}
inline double ou_lag1_autocorr(double theta, double dt) { return 1.0 - theta * dt; }

struct OUStats {
  double mean = 0.0;
  double stddev = 0.0;
  double lag1 = 0.0;
  long long samples = 0;
};

// Empirical moments over `steps` updates, pooled across lanes.
inline OUStats ou_empirical_stats(const OUState& init, long long steps, std::mt19937_64& rng) {
  OUState state = ou_reset(init);
  const std::size_t lanes = state.x.size();
  std::vector<std::vector<double>> series(lanes);
  for (auto& lane : series) lane.reserve(static_cast<std::size_t>(steps));
  for (long long t = 0; t < steps; ++t) {
    state = ou_step(state, rng);
    for (std::size_t l = 0; l < lanes; ++l) series[l].push_back(state.x[l]);
  }
  OUStats stats;
  stats.samples = steps * static_cast<long long>(lanes);
  double sum = 0.0;
  for (const auto& lane : series)
    for (double v : lane) sum += v;
  stats.mean = sum / static_cast<double>(stats.samples);
  double ss = 0.0, lag_num = 0.0;
  for (const auto& lane : series) {
    for (std::size_t t = 0; t < lane.size(); ++t) {
      const double d = lane[t] - stats.mean;
      ss += d * d;
      if (t + 1 < lane.size()) lag_num += d * (lane[t + 1] - stats.mean);
    }
  }
  stats.stddev = std::sqrt(ss / static_cast<double>(stats.samples));
  stats.lag1 = ss > 0.0 ? lag_num / ss : 0.0;
  return stats;
}

struct EpsilonSchedule {
  double eps0 = 1.0;
  double decay = 0.995;
  double floor = 0.1;
};

inline void validate_schedule(const EpsilonSchedule& s) {
  if (!(s.floor >= 0.0 && s.floor <= s.eps0 && s.eps0 <= 1.0))
    throw ValidationError("epsilon schedule: need 0 <= floor <= eps0 <= 1");
  if (!(s.decay > 0.0 && s.decay < 1.0))
    throw ValidationError("epsilon schedule: decay must lie in (0,1)");
}

inline double epsilon_at(const EpsilonSchedule& s, long long episode) {
  if (episode < 0) throw ValidationError("epsilon_at: episode must be non-negative");
  return std::max(s.floor, s.eps0 * std::pow(s.decay, static_cast<double>(episode)));
}

// Non-negative weights whose squares form a probability distribution.
struct Amplitudes {
  std::vector<double> alpha;

  std::vector<double> probs() const {
    std::vector<double> p(alpha.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = alpha[i] * alpha[i];
    return p;
  }
};

inline Amplitudes to_amplitudes(std::span<const double> raw) {
  double norm_sq = 0.0;
  bool any_positive = false;
  for (double v : raw) {
    if (v < 0.0) throw ValidationError("to_amplitudes: negative entry");
    norm_sq += v * v;
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw ValidationError("to_amplitudes: all-zero input is degenerate");
  const double norm = std::sqrt(norm_sq);
  Amplitudes amp;
  amp.alpha.reserve(raw.size());
  for (double v : raw) amp.alpha.push_back(v / norm);
  return amp;
}

enum class SampleMode { Exploit, Explore };

struct PerturbResult {
  std::vector<double> probs;
  SampleMode mode = SampleMode::Exploit;
};

// Adds the OU noise to the policy output (clamped to [0,1]); with
// probability eps the whole vector is replaced by a fresh uniform draw.
// When the amplitude sampler is enabled the chosen vector is renormalized
// so its squares sum to one; ranking is unchanged either way.
inline PerturbResult perturb_and_select(std::span<const double> probs, double eps,
                                        const OUState& ou, std::mt19937_64& rng,
                                        bool amplitude_enabled = false) {
  if (probs.size() != ou.x.size())
    throw DimensionError("perturb_and_select: probs and noise lanes disagree");
  PerturbResult result;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  if (uniform(rng) < eps) {
    result.mode = SampleMode::Explore;
    result.probs.resize(probs.size());
    for (double& p : result.probs) p = uniform(rng);
  } else {
    result.mode = SampleMode::Exploit;
    result.probs.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
      result.probs.push_back(std::clamp(probs[i] + ou.x[i], 0.0, 1.0));
  }
  if (amplitude_enabled &&
      std::any_of(result.probs.begin(), result.probs.end(), [](double p) { return p > 0.0; }))
    result.probs = to_amplitudes(result.probs).probs();
  return result;
}

}  // namespace cutplan
