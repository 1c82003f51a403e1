#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <unordered_map>
#include <vector>

#include "cutplan/core.hpp"
#include "cutplan/env.hpp"
#include "cutplan/errors.hpp"

namespace cutplan {

// Deterministic planner: repeatedly cut the lowest-indexed sizes that still
// have demand, one marker each while the board allows, with ply count equal
// to the smallest remaining demand among the selected sizes.
inline CutPlan greedy_plan(const Order& order) {
  validate_order(order);
  std::vector<int> remaining = order.demands;
  const int n = order.size_count();
  CutPlan plan;
  auto any_left = [&] {
    for (int r : remaining)
      if (r > 0) return true;
    return false;
  };
  while (any_left()) {
    Section section;
    section.counts.assign(n, 0);
    for (int s = 0; s < n; ++s) {
      if (remaining[s] == 0) continue;
      section.counts[s] = 1;
      if (layer_length(section, order) > order.board_len) section.counts[s] = 0;
    }
    int plies = 0;
    for (int s = 0; s < n; ++s)
      if (section.counts[s] > 0)
        plies = plies == 0 ? remaining[s] : std::min(plies, remaining[s]);
    section.plies = plies;
    for (int s = 0; s < n; ++s)
      if (section.counts[s] > 0) remaining[s] -= plies;
    plan.sections.push_back(std::move(section));
  }
  return plan;
}

struct RandomPlanResult {
  CutPlan plan;
  bool fulfilled = false;  // false: the section cap was hit first
};

// Exploration baseline: decode uniformly random probability vectors until
// the order is fulfilled or 4n sections have been emitted.
inline RandomPlanResult random_plan(const Order& order, std::uint64_t seed) {
  validate_order(order);
  std::mt19937_64 rng(seed);
  EnvState state = reset(order);
  const int n = order.size_count();
  const int cap = 4 * n;
  RandomPlanResult result;
  while (!fulfilled(state) && static_cast<int>(result.plan.sections.size()) < cap) {
    std::vector<double> probs(n);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (double& p : probs) p = uniform(rng);
    Section section = decode_action(probs, state, order);
    for (int s = 0; s < n; ++s)
      state.remaining[s] = std::max(0, state.remaining[s] - section.plies * section.counts[s]);
    state.step_index += 1;
    result.plan.sections.push_back(std::move(section));
  }
  result.fulfilled = fulfilled(state);
  return result;
}

struct OracleLimits {
  long long max_states = 10'000'000;  // guard on prod_s (demand_s + 1)
  long long node_budget = 0;          // 0: rely on the state-space guard alone
  bool zero_one = false;              // restrict markers to one garment per size
};

struct OracleResult {
  int min_sections = 0;
  CutPlan witness;
  long long nodes_explored = 0;
};

namespace detail {

struct RemainingHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ull;
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct OracleMemoEntry {
  int sections = 0;
  std::vector<int> move_counts;  // best first section from this state
  int move_plies = 0;
};

}  // namespace detail

// Exhaustive search for the provably minimum number of sections fulfilling
// the order exactly. States are remaining-demand vectors, memoized; every
// board-feasible count vector bounded by remaining demand is tried with
// every ply count up to the per-size quotient. Refuses instances whose
// state space exceeds max_states unless a node budget is given, and refuses
// mid-search when that budget runs out.
inline OracleResult oracle_min_sections(const Order& order, const OracleLimits& limits = {}) {
  validate_order(order);
  const int n = order.size_count();

  long double space = 1.0L;
  for (int d : order.demands) space *= static_cast<long double>(d) + 1.0L;
  if (space > static_cast<long double>(limits.max_states) && limits.node_budget == 0)
    throw BudgetError("oracle: state space exceeds max_states guard (" +
                      std::to_string(limits.max_states) +
                      "); pass an explicit node budget to search anyway");

  std::unordered_map<std::vector<int>, detail::OracleMemoEntry, detail::RemainingHash> memo;
  long long nodes = 0;
  constexpr int kUnsolvable = std::numeric_limits<int>::max() / 2;

  std::function<int(const std::vector<int>&, int)> solve =
      [&](const std::vector<int>& remaining, int depth) -> int {
    bool done = true;
    for (int r : remaining) done = done && r == 0;
    if (done) return 0;
    auto it = memo.find(remaining);
    if (it != memo.end()) return it->second.sections;

    ++nodes;
    if (limits.node_budget > 0 && nodes > limits.node_budget)
      throw BudgetError("oracle: node budget " + std::to_string(limits.node_budget) +
                        " exhausted before the search completed");
    if (depth > 100000)
      throw BudgetError("oracle: search depth limit exceeded");

    detail::OracleMemoEntry best;
    best.sections = kUnsolvable;
    std::vector<int> counts(n, 0);

    // Enumerate count vectors in ascending lexicographic order; the first
    // strict improvement wins, so the witness is deterministic.
    std::function<void(int, double)> enumerate = [&](int s, double used_len) {
      if (s == n) {
        int max_plies = 0;
        for (int i = 0; i < n; ++i)
          if (counts[i] > 0) {
            const int q = remaining[i] / counts[i];
            max_plies = max_plies == 0 ? q : std::min(max_plies, q);
          }
        if (max_plies == 0) return;  // all-zero vector
        std::vector<int> child(n);
        for (int plies = max_plies; plies >= 1; --plies) {
          for (int i = 0; i < n; ++i) child[i] = remaining[i] - plies * counts[i];
          const int rest = solve(child, depth + 1);
          if (rest + 1 < best.sections) {
            best.sections = rest + 1;
            best.move_counts = counts;
            best.move_plies = plies;
          }
        }
        return;
      }
      const int cap = limits.zero_one ? 1 : remaining[s];
      for (int c = 0; c <= cap; ++c) {
        const double len = used_len + c * order.sizes[s].marker_len;
        if (c > 0 && (len > order.board_len || c > remaining[s])) break;
        counts[s] = c;
        enumerate(s + 1, len);
      }
      counts[s] = 0;
    };
    enumerate(0, 0.0);

    memo.emplace(remaining, best);
    return best.sections;
  };

  OracleResult result;
  result.min_sections = solve(order.demands, 0);
  result.nodes_explored = nodes;

  std::vector<int> remaining = order.demands;
  while (!std::all_of(remaining.begin(), remaining.end(), [](int r) { return r == 0; })) {
    const detail::OracleMemoEntry& entry = memo.at(remaining);
    Section section;
    section.plies = entry.move_plies;
    section.counts = entry.move_counts;
    for (int s = 0; s < n; ++s) remaining[s] -= entry.move_plies * entry.move_counts[s];
    result.witness.sections.push_back(std::move(section));
  }
  return result;
}

}  // namespace cutplan
