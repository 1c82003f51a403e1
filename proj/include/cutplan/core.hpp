#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "cutplan/errors.hpp"

namespace cutplan {

// One garment size: the fabric length (yards) one garment of this size
// occupies in a marker, and the fabric consumed per produced garment.
struct SizeSpec {
  std::string label;
  double marker_len = 0.0;
  double consumption = 0.0;
};

// A production order: the size list, demanded units per size, and the
// usable cutting-board length in yards.
struct Order {
  std::vector<SizeSpec> sizes;
  std::vector<int> demands;
  double board_len = 0.0;

  int size_count() const { return static_cast<int>(sizes.size()); }
};

// One cutting section: `plies` fabric layers spread under a marker that
// holds `counts[s]` garments of size s per layer.
struct Section {
  int plies = 0;
  std::vector<int> counts;
};

// An ordered list of sections; executing them in order is the cut plan.
struct CutPlan {
  std::vector<Section> sections;
};

inline void validate_order(const Order& order) {
  if (order.sizes.empty()) throw ValidationError("order has no sizes");
  if (order.demands.size() != order.sizes.size())
    throw ValidationError("order has " + std::to_string(order.sizes.size()) +
                          " sizes but " + std::to_string(order.demands.size()) +
                          " demand entries");
  double max_marker = 0.0;
  for (std::size_t s = 0; s < order.sizes.size(); ++s) {
    const SizeSpec& spec = order.sizes[s];
    if (!(spec.marker_len > 0.0))
      throw ValidationError("size '" + spec.label + "' has non-positive marker_len");
    if (!(spec.consumption > 0.0))
      throw ValidationError("size '" + spec.label + "' has non-positive consumption");
    if (order.demands[s] < 0)
      throw ValidationError("size '" + spec.label + "' has negative demand " +
                            std::to_string(order.demands[s]));
    max_marker = std::max(max_marker, spec.marker_len);
  }
  if (order.board_len < max_marker)
    throw ValidationError("board_len " + std::to_string(order.board_len) +
                          " is shorter than the longest marker (" +
                          std::to_string(max_marker) + "); no size is cuttable");
}

inline long long total_garments(const Order& order) {
  long long total = 0;
  for (int d : order.demands) total += d;
  return total;
}

// R: fabric length the order demands, sum over sizes of demand*consumption.
inline double total_demand_fabric(const Order& order) {
  double r = 0.0;
  for (std::size_t s = 0; s < order.demands.size(); ++s)
    r += static_cast<double>(order.demands[s]) * order.sizes[s].consumption;
  return r;
}

inline void check_section_dims(const Section& section, const Order& order) {
  if (section.counts.size() != order.sizes.size())
    throw DimensionError("section has " + std::to_string(section.counts.size()) +
                         " counts for an order with " +
                         std::to_string(order.sizes.size()) + " sizes");
}

// C: fabric length one layer of this section uses on the board.
inline double layer_length(const Section& section, const Order& order) {
  check_section_dims(section, order);
  double len = 0.0;
  for (std::size_t s = 0; s < section.counts.size(); ++s)
    len += static_cast<double>(section.counts[s]) * order.sizes[s].marker_len;
  return len;
}

// P_s: garments produced per size by the whole plan.
inline std::vector<long long> production(const CutPlan& plan, const Order& order) {
  std::vector<long long> produced(order.sizes.size(), 0);
  for (const Section& section : plan.sections) {
    check_section_dims(section, order);
    for (std::size_t s = 0; s < produced.size(); ++s)
      produced[s] += static_cast<long long>(section.plies) * section.counts[s];
  }
  return produced;
}

// F: total fabric the plan spreads, sum over sections of plies*layer_length.
inline double fabric_used(const CutPlan& plan, const Order& order) {
  double used = 0.0;
  for (const Section& section : plan.sections)
    used += static_cast<double>(section.plies) * layer_length(section, order);
  return used;
}

// W = F - R. Negative when the plan under-produces; validate_plan reports
// that case, the accounting here does not clamp.
inline double waste(const CutPlan& plan, const Order& order) {
  return fabric_used(plan, order) - total_demand_fabric(order);
}

struct SectionCheck {
  double layer_len = 0.0;
  bool within_board = false;
  bool dims_ok = false;
};

struct PlanReport {
  std::vector<SectionCheck> sections;
  std::vector<long long> produced;
  std::vector<long long> balance;  // demand - produced, per size
  bool board_ok = false;
  bool exact = false;           // balance all zero
  bool feasible_exact = false;  // board_ok && exact (&& no dim violations)
};

// Constraint violations are report content, never exceptions.
inline PlanReport validate_plan(const CutPlan& plan, const Order& order) {
  PlanReport report;
  report.produced.assign(order.sizes.size(), 0);
  report.board_ok = true;
  bool dims_ok = true;
  for (const Section& section : plan.sections) {
    SectionCheck check;
    check.dims_ok = section.counts.size() == order.sizes.size();
    if (check.dims_ok) {
      check.layer_len = layer_length(section, order);
      check.within_board = check.layer_len <= order.board_len;
      for (std::size_t s = 0; s < report.produced.size(); ++s)
        report.produced[s] += static_cast<long long>(section.plies) * section.counts[s];
    } else {
      dims_ok = false;
      check.within_board = false;
    }
    report.board_ok = report.board_ok && check.within_board;
    report.sections.push_back(check);
  }
  report.balance.resize(order.demands.size());
  report.exact = true;
  for (std::size_t s = 0; s < report.balance.size(); ++s) {
    report.balance[s] = order.demands[s] - report.produced[s];
    report.exact = report.exact && report.balance[s] == 0;
  }
  report.feasible_exact = report.board_ok && report.exact && dims_ok;
  return report;
}

// The six-size demo instance used by the bundled data file, the gradcheck
// command, and the tests: board 9 yd, every marker and consumption 3 yd.
inline Order sample_order() {
  Order order;
  order.board_len = 9.0;
  const char* labels[] = {"XS", "S", "M", "L", "XL", "XXL"};
  const int demands[] = {78, 151, 214, 188, 172, 36};
  for (int s = 0; s < 6; ++s) {
    order.sizes.push_back({labels[s], 3.0, 3.0});
    order.demands.push_back(demands[s]);
  }
  return order;
}

}  // namespace cutplan
