#pragma once

#include <random>
#include <vector>

#include "cutplan/core.hpp"

namespace testutil {

// The published six-section allocation for the sample order: plies
// [78,73,63,36,16,57] with the sliding 0/1 incidence rows.
inline cutplan::CutPlan golden_plan() {
  using cutplan::Section;
  cutplan::CutPlan plan;
  plan.sections = {
      Section{78, {1, 1, 1, 0, 0, 0}}, Section{73, {0, 1, 1, 1, 0, 0}},
      Section{63, {0, 0, 1, 1, 1, 0}}, Section{36, {0, 0, 0, 1, 1, 1}},
      Section{16, {0, 0, 0, 1, 1, 0}}, Section{57, {0, 0, 0, 0, 1, 0}},
  };
  return plan;
}

// Uniform order: n sizes, every marker and consumption `marker` yards.
inline cutplan::Order uniform_order(std::vector<int> demands, double board,
                                    double marker = 3.0) {
  cutplan::Order order;
  order.board_len = board;
  for (std::size_t s = 0; s < demands.size(); ++s)
    order.sizes.push_back({"S" + std::to_string(s), marker, marker});
  order.demands = std::move(demands);
  return order;
}

// Random order with marker == consumption drawn from dyadic values, so all
// fabric accounting stays exact in doubles.
inline cutplan::Order random_exact_order(std::mt19937_64& rng, int max_sizes = 6,
                                         int max_demand = 30) {
  std::uniform_int_distribution<int> n_sizes(1, max_sizes);
  std::uniform_int_distribution<int> demand(0, max_demand);
  std::uniform_int_distribution<int> halves(1, 8);  // marker in {0.5,...,4.0}
  std::uniform_int_distribution<int> board_mult(1, 4);
  cutplan::Order order;
  const int n = n_sizes(rng);
  double max_marker = 0.0;
  bool any = false;
  for (int s = 0; s < n; ++s) {
    const double marker = 0.5 * halves(rng);
    order.sizes.push_back({"S" + std::to_string(s), marker, marker});
    const int d = demand(rng);
    order.demands.push_back(d);
    any = any || d > 0;
    max_marker = std::max(max_marker, marker);
  }
  if (!any) order.demands[0] = 1;
  order.board_len = max_marker * board_mult(rng);
  return order;
}

}  // namespace testutil
