#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "cutplan/core.hpp"
#include "cutplan/errors.hpp"

namespace cutplan {

// Episodic view of an order: state is the remaining demand vector, an
// action is one executable section.
struct EnvState {
  std::vector<int> remaining;
  int step_index = 0;
};

struct EnvConfig {
  int max_steps = 50;
  double lambda_over = 1.0;  // overproduction penalty weight
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  bool done = false;
  Section executed;
};

inline EnvState reset(const Order& order) {
  validate_order(order);
  return EnvState{order.demands, 0};
}

inline bool fulfilled(const EnvState& state) {
  return std::all_of(state.remaining.begin(), state.remaining.end(),
                     [](int r) { return r == 0; });
}

// Network input encoding: remaining demand as a fraction of the initial
// demand, zero for sizes that were never demanded.
inline std::vector<double> state_features(const EnvState& state, const Order& order) {
  std::vector<double> features(state.remaining.size(), 0.0);
  for (std::size_t s = 0; s < features.size(); ++s)
    if (order.demands[s] > 0)
      features[s] = static_cast<double>(state.remaining[s]) / order.demands[s];
  return features;
}

// Turns a probability vector into a board-feasible section: sizes are
// visited in descending probability (ties to the lower index), sizes with
// no remaining demand are skipped, each taken size contributes one marker
// while the layer still fits the board, and the ply count is the minimum
// remaining demand among the taken sizes, so at least one size is zeroed.
inline Section decode_action(std::span<const double> probs, const EnvState& state,
                             const Order& order) {
  const int n = order.size_count();
  if (static_cast<int>(probs.size()) != n)
    throw DimensionError("decode_action: got " + std::to_string(probs.size()) +
                         " probabilities for " + std::to_string(n) + " sizes");
  if (fulfilled(state))
    throw NoActionError("decode_action: no remaining demand, episode should be done");

  std::vector<int> ranked(n);
  std::iota(ranked.begin(), ranked.end(), 0);
  std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });

  Section section;
  section.counts.assign(n, 0);
  for (int s : ranked) {
    if (state.remaining[s] == 0) continue;
    section.counts[s] = 1;
    // Recompute the full sum so the check is bit-identical to validate_plan.
    if (layer_length(section, order) > order.board_len) section.counts[s] = 0;
  }
  int plies = 0;
  for (int s = 0; s < n; ++s)
    if (section.counts[s] > 0)
      plies = plies == 0 ? state.remaining[s] : std::min(plies, state.remaining[s]);
  section.plies = plies;
  return section;
}

// Executes one section. Reward is the demand-fulfillment fraction scaled by
// board utilization, minus a penalty for garments cut beyond remaining
// demand; remaining demand is clamped at zero.
inline StepOutcome step(const EnvState& state, const Section& section,
                        const Order& order, const EnvConfig& cfg) {
  check_section_dims(section, order);
  if (section.plies <= 0)
    throw ConstraintError("step: section has non-positive ply count");
  bool any = false;
  for (int c : section.counts) {
    if (c < 0) throw ConstraintError("step: section has a negative count");
    any = any || c > 0;
  }
  if (!any) throw ConstraintError("step: section has an empty marker");
  const double layer = layer_length(section, order);
  if (layer > order.board_len)
    throw ConstraintError("step: layer length " + std::to_string(layer) +
                          " exceeds board length " + std::to_string(order.board_len));

  StepOutcome out;
  out.executed = section;
  out.next_state.remaining.resize(state.remaining.size());
  out.next_state.step_index = state.step_index + 1;

  long long useful = 0;
  long long over = 0;
  for (std::size_t s = 0; s < state.remaining.size(); ++s) {
    const long long produced = static_cast<long long>(section.plies) * section.counts[s];
    useful += std::min<long long>(produced, state.remaining[s]);
    over += std::max<long long>(0, produced - state.remaining[s]);
    out.next_state.remaining[s] =
        static_cast<int>(std::max<long long>(0, state.remaining[s] - produced));
  }
  const double total = static_cast<double>(std::max<long long>(1, total_garments(order)));
  out.reward = (static_cast<double>(useful) / total) * (layer / order.board_len) -
               cfg.lambda_over * (static_cast<double>(over) / total);
  out.done = fulfilled(out.next_state) || out.next_state.step_index >= cfg.max_steps;
  return out;
}

}  // namespace cutplan
