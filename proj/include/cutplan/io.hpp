#pragma once

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cutplan/baselines.hpp"
#include "cutplan/core.hpp"
#include "cutplan/errors.hpp"
#include "cutplan/train.hpp"

namespace cutplan {

// Shortest representation that round-trips through a double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// ---------------------------------------------------------------------------
// Orders

inline Order order_from_json(const nlohmann::json& j) {
  Order order;
  try {
    order.board_len = j.at("board_len").get<double>();
    for (const auto& size : j.at("sizes")) {
      SizeSpec spec;
      spec.label = size.at("label").get<std::string>();
      spec.marker_len = size.at("marker_len").get<double>();
      spec.consumption = size.at("consumption").get<double>();
      order.sizes.push_back(std::move(spec));
    }
    order.demands = j.at("demands").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("order json: ") + e.what());
  }
  validate_order(order);
  return order;
}

inline nlohmann::json order_to_json(const Order& order) {
  nlohmann::json j;
  j["board_len"] = order.board_len;
  j["sizes"] = nlohmann::json::array();
  for (const SizeSpec& spec : order.sizes)
    j["sizes"].push_back({{"label", spec.label},
                          {"marker_len", spec.marker_len},
                          {"consumption", spec.consumption}});
  j["demands"] = order.demands;
  return j;
}

inline Order load_order_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open order file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return order_from_json(j);
}

// CSV rows `label,marker_len,consumption,demand`; board length comes from
// the caller since the file has no place for it.
inline Order load_order_csv(const std::string& path, double board_len) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open order file: " + path);
  Order order;
  order.board_len = board_len;
  std::string line;
  int line_no = 0;
  auto fields_of = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    return fields;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::vector<std::string> fields = fields_of(stripped);
    if (line_no == 1) {
      if (fields != std::vector<std::string>{"label", "marker_len", "consumption", "demand"})
        throw ParseError(path + ":1: expected header label,marker_len,consumption,demand");
      continue;
    }
    if (fields.size() != 4)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    SizeSpec spec;
    spec.label = fields[0];
    int demand = 0;
    try {
      spec.marker_len = std::stod(fields[1]);
      spec.consumption = std::stod(fields[2]);
      demand = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric field in row '" +
                       stripped + "'");
    }
    if (demand < 0)
      throw ParseError(path + ":" + std::to_string(line_no) + ": negative demand " +
                       std::to_string(demand) + " for size '" + spec.label + "'");
    order.sizes.push_back(std::move(spec));
    order.demands.push_back(demand);
  }
  validate_order(order);
  return order;
}

inline Order load_order(const std::string& path, const std::string& format, double board_len) {
  if (format == "json") return load_order_json(path);
  if (format == "csv") return load_order_csv(path, board_len);
  throw ValidationError("unknown order format '" + format + "' (expected json or csv)");
}

// ---------------------------------------------------------------------------
// Plans

inline nlohmann::json plan_to_json(const CutPlan& plan, const Order& order) {
  const PlanReport report = validate_plan(plan, order);
  nlohmann::json j;
  j["board_len"] = order.board_len;
  j["sizes"] = nlohmann::json::array();
  for (const SizeSpec& spec : order.sizes) j["sizes"].push_back(spec.label);
  j["sections"] = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.sections.size(); ++i) {
    const Section& section = plan.sections[i];
    std::vector<long long> garments(section.counts.size());
    for (std::size_t s = 0; s < section.counts.size(); ++s)
      garments[s] = static_cast<long long>(section.plies) * section.counts[s];
    j["sections"].push_back({{"iteration", i + 1},
                             {"plies", section.plies},
                             {"counts", section.counts},
                             {"garments", garments},
                             {"layer_len", report.sections[i].layer_len}});
  }
  j["total_produce"] = report.produced;
  j["balance"] = report.balance;
  j["fabric_used"] = fabric_used(plan, order);
  j["waste"] = waste(plan, order);
  j["feasible_exact"] = report.feasible_exact;
  return j;
}

inline CutPlan plan_from_json(const nlohmann::json& j) {
  CutPlan plan;
  try {
    for (const auto& s : j.at("sections")) {
      Section section;
      section.plies = s.at("plies").get<int>();
      section.counts = s.at("counts").get<std::vector<int>>();
      plan.sections.push_back(std::move(section));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan json: ") + e.what());
  }
  return plan;
}

// Aligned text table with the classic allocation layout: one counts row and
// one garments row per section, then the produce and balance summary rows.
inline std::string plan_table(const CutPlan& plan, const Order& order) {
  const PlanReport report = validate_plan(plan, order);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"Iteration", "Plies"};
  for (const SizeSpec& spec : order.sizes) header.push_back(spec.label);
  header.push_back("Total");
  rows.push_back(header);

  for (std::size_t i = 0; i < plan.sections.size(); ++i) {
    const Section& section = plan.sections[i];
    std::vector<std::string> counts_row = {std::to_string(i + 1),
                                           std::to_string(section.plies)};
    std::vector<std::string> garments_row = {"", ""};
    long long count_total = 0, garment_total = 0;
    for (int c : section.counts) {
      const long long garments = static_cast<long long>(section.plies) * c;
      counts_row.push_back(std::to_string(c));
      garments_row.push_back(std::to_string(garments));
      count_total += c;
      garment_total += garments;
    }
    counts_row.push_back(std::to_string(count_total));
    garments_row.push_back(std::to_string(garment_total));
    rows.push_back(counts_row);
    rows.push_back(garments_row);
  }

  std::vector<std::string> produce_row = {"Total Produce", "-"};
  std::vector<std::string> balance_row = {"Balance", "-"};
  long long produce_total = 0, balance_total = 0;
  for (std::size_t s = 0; s < report.produced.size(); ++s) {
    produce_row.push_back(std::to_string(report.produced[s]));
    balance_row.push_back(std::to_string(report.balance[s]));
    produce_total += report.produced[s];
    balance_total += report.balance[s];
  }
  produce_row.push_back(std::to_string(produce_total));
  balance_row.push_back(std::to_string(balance_total));
  rows.push_back(produce_row);
  rows.push_back(balance_row);

  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      const int pad = static_cast<int>(widths[c] - row[c].size());
      if (c == 0)
        out << row[c] << std::string(pad, ' ');
      else
        out << std::string(pad, ' ') << row[c];
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Training metrics

inline void write_metrics_csv(const TrainMetrics& metrics, std::ostream& out) {
  out << "episode,total_reward,loss,epsilon,steps\n";
  for (const MetricsRow& row : metrics.rows)
    out << row.episode << ',' << format_double(row.total_reward) << ','
        << format_double(row.loss) << ',' << format_double(row.epsilon) << ',' << row.steps
        << '\n';
}

inline void save_metrics_csv(const TrainMetrics& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write metrics file: " + path);
  write_metrics_csv(metrics, out);
}

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  PolicyParams params;
  AdamState adam;
  std::mt19937_64 rng;
  long long episode = 0;
};

inline nlohmann::json checkpoint_to_json(const PolicyParams& params, const AdamState& adam,
                                         const std::mt19937_64& rng, long long episode) {
  const NetDims& dims = params.dims();
  nlohmann::json j;
  j["version"] = 1;
  j["dims"] = {{"input", dims.input}, {"hidden", dims.hidden}, {"output", dims.output}};
  j["params"] = std::vector<double>(params.flat().begin(), params.flat().end());
  j["adam"] = {{"m", adam.m},        {"v", adam.v},       {"t", adam.t},
               {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}};
  std::ostringstream rng_state;
  rng_state << rng;
  j["rng"] = rng_state.str();
  j["episode"] = episode;
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1)
      throw ValidationError("checkpoint: unsupported version");
    NetDims dims;
    dims.input = j.at("dims").at("input").get<int>();
    dims.hidden = j.at("dims").at("hidden").get<int>();
    dims.output = j.at("dims").at("output").get<int>();
    PolicyParams params(dims);
    const auto flat = j.at("params").get<std::vector<double>>();
    if (flat.size() != params.flat().size())
      throw ValidationError("checkpoint: parameter count " + std::to_string(flat.size()) +
                            " does not match dims (" +
                            std::to_string(params.flat().size()) + ")");
    std::copy(flat.begin(), flat.end(), params.flat().begin());
    AdamState adam(dims);
    adam.m = j.at("adam").at("m").get<std::vector<double>>();
    adam.v = j.at("adam").at("v").get<std::vector<double>>();
    if (adam.m.size() != flat.size() || adam.v.size() != flat.size())
      throw ValidationError("checkpoint: optimizer state does not match dims");
    adam.t = j.at("adam").at("t").get<long long>();
    adam.beta1 = j.at("adam").at("beta1").get<double>();
    adam.beta2 = j.at("adam").at("beta2").get<double>();
    adam.eps = j.at("adam").at("eps").get<double>();
    std::mt19937_64 rng;
    std::istringstream rng_state(j.at("rng").get<std::string>());
    rng_state >> rng;
    const long long episode = j.at("episode").get<long long>();
    return Checkpoint{std::move(params), std::move(adam), rng, episode};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint json: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const PolicyParams& params,
                            const AdamState& adam, const std::mt19937_64& rng,
                            long long episode) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(params, adam, rng, episode) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

// ---------------------------------------------------------------------------
// Run configuration: flat key=value lines with dotted section names.

struct RunConfig {
  TrainConfig train;
  OracleLimits oracle;
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& context) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(context + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& context) {
  T value{};
  const char* begin = v.data();
  const char* end = v.data() + v.size();
  std::from_chars_result res{};
  if constexpr (std::is_floating_point_v<T>)
    res = std::from_chars(begin, end, value, std::chars_format::general);
  else
    res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(context + ": expected a number, got '" + v + "'");
  return value;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                               const std::string& context) {
  using detail::parse_bool;
  using detail::parse_number;
  if (key == "env.max_steps")
    cfg.train.env.max_steps = parse_number<int>(value, context);
  else if (key == "env.lambda_over")
    cfg.train.env.lambda_over = parse_number<double>(value, context);
  else if (key == "ou.mu")
    cfg.train.explore.ou.mu = parse_number<double>(value, context);
  else if (key == "ou.theta")
    cfg.train.explore.ou.theta = parse_number<double>(value, context);
  else if (key == "ou.sigma")
    cfg.train.explore.ou.sigma = parse_number<double>(value, context);
  else if (key == "ou.dt")
    cfg.train.explore.ou.dt = parse_number<double>(value, context);
  else if (key == "ou.enabled")
    cfg.train.explore.ou.enabled = parse_bool(value, context);
  else if (key == "eps.start")
    cfg.train.explore.eps.eps0 = parse_number<double>(value, context);
  else if (key == "eps.decay")
    cfg.train.explore.eps.decay = parse_number<double>(value, context);
  else if (key == "eps.floor")
    cfg.train.explore.eps.floor = parse_number<double>(value, context);
  else if (key == "eps.enabled")
    cfg.train.explore.eps_enabled = parse_bool(value, context);
  else if (key == "sampler.amplitude_enabled")
    cfg.train.explore.amplitude_enabled = parse_bool(value, context);
  else if (key == "train.episodes")
    cfg.train.episodes = parse_number<int>(value, context);
  else if (key == "train.gamma")
    cfg.train.gamma = parse_number<double>(value, context);
  else if (key == "train.lr")
    cfg.train.lr = parse_number<double>(value, context);
  else if (key == "train.seed")
    cfg.train.seed = parse_number<std::uint64_t>(value, context);
  else if (key == "train.norm_window")
    cfg.train.norm_window = parse_number<long long>(value, context);
  else if (key == "train.logpi_on_final")
    cfg.train.logpi_on_final = parse_bool(value, context);
  else if (key == "train.hidden")
    cfg.train.hidden = parse_number<int>(value, context);
  else if (key == "oracle.max_states")
    cfg.oracle.max_states = parse_number<long long>(value, context);
  else if (key == "oracle.node_budget")
    cfg.oracle.node_budget = parse_number<long long>(value, context);
  else if (key == "oracle.zero_one")
    cfg.oracle.zero_one = parse_bool(value, context);
  else
    throw ParseError(context + ": unknown config key '" + key + "'");
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(context + ": expected key = value, got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError(context + ": expected key = value, got '" + stripped + "'");
    apply_config_entry(cfg, key, value, context);
  }
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["rollouts"] = nlohmann::json::array();
  for (const EvalRollout& roll : report.rollouts)
    j["rollouts"].push_back({{"steps", roll.steps},
                             {"sections", roll.sections},
                             {"feasible_exact", roll.feasible_exact},
                             {"waste", roll.waste_yards},
                             {"total_reward", roll.total_reward}});
  j["summary"] = {{"episodes", report.rollouts.size()},
                  {"feasible_fraction", report.feasible_fraction},
                  {"mean_sections", report.mean_sections},
                  {"mean_reward", report.mean_reward}};
  return j;
}

}  // namespace cutplan
