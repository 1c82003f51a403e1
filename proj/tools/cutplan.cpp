// Command-line surface for the cut order planning toolkit.
//
// Exit codes: 0 success, 1 validation/domain error, 2 usage error,
// 3 internal numeric failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cutplan/baselines.hpp"
#include "cutplan/core.hpp"
#include "cutplan/env.hpp"
#include "cutplan/io.hpp"
#include "cutplan/train.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct OrderArgs {
  std::string path;
  std::string format = "json";
  double board_len = 0.0;
  bool board_len_given = false;
};

void add_order_options(CLI::App* cmd, OrderArgs& args) {
  cmd->add_option("--order", args.path, "order file")->required();
  cmd->add_option("--format", args.format, "order file format (json|csv)")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--board-len", args.board_len, "board length in yards (csv orders only)")
      ->check(CLI::PositiveNumber);
}

cutplan::Order load_order_args(const OrderArgs& args) {
  if (args.format == "csv" && !args.board_len_given)
    throw CLI::ValidationError("--board-len is required for csv orders");
  return cutplan::load_order(args.path, args.format, args.board_len);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cutplan::ValidationError("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cutplan::ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

int cmd_plan(const OrderArgs& order_args, const std::string& planner,
             const std::string& checkpoint_path, const std::string& out_dir,
             const cutplan::RunConfig& cfg, bool zero_one) {
  const cutplan::Order order = load_order_args(order_args);
  cutplan::CutPlan plan;
  json extra = json::object();
  if (planner == "greedy") {
    plan = cutplan::greedy_plan(order);
  } else if (planner == "oracle") {
    cutplan::OracleLimits limits = cfg.oracle;
    limits.zero_one = limits.zero_one || zero_one;
    const cutplan::OracleResult result = cutplan::oracle_min_sections(order, limits);
    plan = result.witness;
    extra["oracle"] = {{"min_sections", result.min_sections},
                       {"nodes_explored", result.nodes_explored},
                       {"zero_one", limits.zero_one}};
  } else {  // agent
    if (checkpoint_path.empty())
      throw CLI::ValidationError("--checkpoint is required for the agent planner");
    const cutplan::Checkpoint ckpt = cutplan::load_checkpoint(checkpoint_path);
    if (ckpt.params.dims().input != order.size_count())
      throw cutplan::ValidationError("checkpoint was trained for " +
                                     std::to_string(ckpt.params.dims().input) +
                                     " sizes, order has " +
                                     std::to_string(order.size_count()));
    plan = cutplan::exploit_rollout(order, ckpt.params, cfg.train.env).plan;
  }

  json j = cutplan::plan_to_json(plan, order);
  j["planner"] = planner;
  j.update(extra);
  std::cout << cutplan::plan_table(plan, order);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json_file(fs::path(out_dir) / "plan.json", j);
    write_text_file(fs::path(out_dir) / "plan.txt", cutplan::plan_table(plan, order));
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_train(const OrderArgs& order_args, const std::string& out_dir,
              cutplan::RunConfig cfg) {
  const cutplan::Order order = load_order_args(order_args);
  fs::create_directories(out_dir);
  const cutplan::TrainResult result = cutplan::train(order, cfg.train);
  cutplan::save_metrics_csv(result.metrics, (fs::path(out_dir) / "metrics.csv").string());
  cutplan::save_checkpoint((fs::path(out_dir) / "checkpoint_final.json").string(),
                           result.params, result.adam, result.rng, cfg.train.episodes);
  cutplan::save_checkpoint((fs::path(out_dir) / "checkpoint_best.json").string(),
                           result.best_params, result.adam, result.rng, result.best_episode);
  const cutplan::MetricsRow& last = result.metrics.rows.back();
  std::cout << "trained " << cfg.train.episodes << " episodes (seed " << cfg.train.seed
            << "); best episode " << result.best_episode << " with total reward "
            << cutplan::format_double(result.best_reward) << "; final epsilon "
            << cutplan::format_double(last.epsilon) << "\n"
            << "wrote " << out_dir << "/metrics.csv, checkpoint_best.json, checkpoint_final.json"
            << "\n";
  return 0;
}

int cmd_evaluate(const OrderArgs& order_args, const std::string& checkpoint_path, int episodes,
                 const std::string& out_dir, const cutplan::RunConfig& cfg) {
  const cutplan::Order order = load_order_args(order_args);
  const cutplan::Checkpoint ckpt = cutplan::load_checkpoint(checkpoint_path);
  const cutplan::EvalReport report =
      cutplan::evaluate(order, ckpt.params, episodes, cfg.train.env);
  const json j = cutplan::eval_report_to_json(report);
  std::cout << j.dump(2) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json_file(fs::path(out_dir) / "evaluation.json", j);
  }
  return 0;
}

int cmd_compare(const OrderArgs& order_args, std::vector<std::string> planners,
                const std::vector<std::uint64_t>& seeds, const std::string& checkpoint_path,
                const std::string& out_dir, const cutplan::RunConfig& cfg) {
  const cutplan::Order order = load_order_args(order_args);
  if (std::find(planners.begin(), planners.end(), "greedy") == planners.end())
    planners.insert(planners.begin(), "greedy");

  json rows = json::array();
  auto add_row = [&](const std::string& name, const cutplan::CutPlan& plan, double ms) {
    const cutplan::PlanReport report = cutplan::validate_plan(plan, order);
    rows.push_back({{"planner", name},
                    {"sections", plan.sections.size()},
                    {"fabric_used", cutplan::fabric_used(plan, order)},
                    {"waste", cutplan::waste(plan, order)},
                    {"feasible_exact", report.feasible_exact},
                    {"runtime_ms", ms}});
  };

  for (const std::string& planner : planners) {
    if (planner == "greedy") {
      const auto start = std::chrono::steady_clock::now();
      const cutplan::CutPlan plan = cutplan::greedy_plan(order);
      add_row("greedy", plan, elapsed_ms(start));
    } else if (planner == "random") {
      for (std::uint64_t seed : seeds) {
        const auto start = std::chrono::steady_clock::now();
        const cutplan::RandomPlanResult result = cutplan::random_plan(order, seed);
        add_row("random[seed=" + std::to_string(seed) + "]", result.plan, elapsed_ms(start));
      }
    } else if (planner == "oracle") {
      const auto start = std::chrono::steady_clock::now();
      try {
        const cutplan::OracleResult result = cutplan::oracle_min_sections(order, cfg.oracle);
        add_row("oracle", result.witness, elapsed_ms(start));
      } catch (const cutplan::BudgetError& e) {
        rows.push_back({{"planner", "oracle"}, {"status", std::string("refused: ") + e.what()}});
      }
    } else if (planner == "agent") {
      if (checkpoint_path.empty())
        throw CLI::ValidationError("--checkpoint is required to compare the agent planner");
      const cutplan::Checkpoint ckpt = cutplan::load_checkpoint(checkpoint_path);
      const auto start = std::chrono::steady_clock::now();
      const cutplan::CutPlan plan = cutplan::exploit_rollout(order, ckpt.params, cfg.train.env).plan;
      add_row("agent", plan, elapsed_ms(start));
    } else {
      throw CLI::ValidationError("unknown planner '" + planner + "'");
    }
  }

  // Aligned text table.
  std::vector<std::vector<std::string>> table = {
      {"planner", "sections", "fabric_used", "waste", "feasible_exact", "runtime_ms"}};
  for (const auto& row : rows) {
    if (row.contains("status")) {
      table.push_back({row["planner"].get<std::string>(), row["status"].get<std::string>(), "",
                       "", "", ""});
      continue;
    }
    table.push_back({row["planner"].get<std::string>(),
                     std::to_string(row["sections"].get<long long>()),
                     cutplan::format_double(row["fabric_used"].get<double>()),
                     cutplan::format_double(row["waste"].get<double>()),
                     row["feasible_exact"].get<bool>() ? "yes" : "no",
                     cutplan::format_double(row["runtime_ms"].get<double>())});
  }
  std::vector<std::size_t> widths(table[0].size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) std::cout << "  ";
      std::cout << row[c] << std::string(widths[c] - row[c].size(), ' ');
    }
    std::cout << '\n';
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json_file(fs::path(out_dir) / "compare.json", json{{"rows", rows}});
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int probes, double fd_eps) {
  const cutplan::GradcheckReport report = cutplan::run_gradcheck(seed, probes, fd_eps);
  const bool pass = report.max_rel_error < 1e-4;
  std::cout << "gradcheck: " << report.probes << " probes, eps "
            << cutplan::format_double(report.fd_eps) << ", max relative error "
            << cutplan::format_double(report.max_rel_error) << " (tolerance 1e-4): "
            << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

int cmd_noise_stats(long long n, std::uint64_t seed, int lanes, const cutplan::RunConfig& cfg) {
  const cutplan::OUSettings& ou = cfg.train.explore.ou;
  std::mt19937_64 rng(seed);
  const cutplan::OUState init = cutplan::make_ou_state(lanes, ou.mu, ou.theta, ou.sigma, ou.dt);
  const cutplan::OUStats stats = cutplan::ou_empirical_stats(init, n, rng);
  const double want_std = cutplan::ou_stationary_std(ou.theta, ou.sigma);
  const double want_lag1 = cutplan::ou_lag1_autocorr(ou.theta, ou.dt);

  const bool mean_ok = std::abs(stats.mean - ou.mu) <= 0.01;
  const bool std_ok = std::abs(stats.stddev - want_std) <= 0.05 * want_std;
  const bool lag_ok = std::abs(stats.lag1 - want_lag1) <= 0.01;
  auto line = [](const std::string& name, double got, double want, bool ok) {
    std::cout << name << ": " << cutplan::format_double(got) << " (expected "
              << cutplan::format_double(want) << "): " << (ok ? "PASS" : "FAIL") << "\n";
  };
  std::cout << "ou stats over " << stats.samples << " samples (" << lanes << " lanes x " << n
            << " steps, seed " << seed << ")\n";
  line("mean (tol +/-0.01)", stats.mean, ou.mu, mean_ok);
  line("stddev (tol 5%)", stats.stddev, want_std, std_ok);
  line("lag-1 autocorr (tol +/-0.01)", stats.lag1, want_lag1, lag_ok);
  return (mean_ok && std_ok && lag_ok) ? 0 : 1;
}

int run(int argc, char** argv) {
  CLI::App app{"cutplan: cut order planning toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "config file (flat key=value; falls back to $CUTPLAN_CONFIG)");

  OrderArgs plan_order, train_order, eval_order, compare_order;
  std::string plan_planner = "greedy", plan_checkpoint, plan_out;
  bool plan_zero_one = false;
  CLI::App* plan_cmd = app.add_subcommand("plan", "produce a cut plan for an order");
  add_order_options(plan_cmd, plan_order);
  plan_cmd->add_option("--planner", plan_planner, "greedy|oracle|agent")
      ->check(CLI::IsMember({"greedy", "oracle", "agent"}));
  plan_cmd->add_option("--checkpoint", plan_checkpoint, "agent checkpoint file");
  plan_cmd->add_option("--out", plan_out, "output directory for plan.json/plan.txt");
  plan_cmd->add_flag("--zero-one", plan_zero_one, "oracle: one garment per size per marker");

  std::string train_out;
  std::uint64_t train_seed = 0;
  int train_episodes = 0;
  CLI::App* train_cmd = app.add_subcommand("train", "train the policy network");
  add_order_options(train_cmd, train_order);
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--seed", train_seed, "training seed (overrides config)");
  train_cmd->add_option("--episodes", train_episodes, "episode count (overrides config)")
      ->check(CLI::PositiveNumber);

  std::string eval_checkpoint, eval_out;
  int eval_episodes = 50;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "greedy-exploit rollouts of a checkpoint");
  add_order_options(eval_cmd, eval_order);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--episodes", eval_episodes, "rollout count")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_out, "output directory");

  std::vector<std::string> compare_planners = {"greedy", "random", "oracle"};
  std::vector<std::uint64_t> compare_seeds = {0};
  std::string compare_checkpoint, compare_out;
  CLI::App* compare_cmd = app.add_subcommand("compare", "run several planners side by side");
  add_order_options(compare_cmd, compare_order);
  compare_cmd->add_option("--planners", compare_planners,
                          "subset of greedy,random,oracle,agent");
  compare_cmd->add_option("--seeds", compare_seeds, "seeds for the random planner");
  compare_cmd->add_option("--checkpoint", compare_checkpoint, "agent checkpoint file");
  compare_cmd->add_option("--out", compare_out, "output directory");

  std::uint64_t grad_seed = 7;
  int grad_probes = 200;
  double grad_eps = 1e-5;
  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of the policy gradient");
  grad_cmd->add_option("--seed", grad_seed, "seed");
  grad_cmd->add_option("--probes", grad_probes, "probed coordinates")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_option("--eps", grad_eps, "finite-difference step")->check(CLI::PositiveNumber);

  long long noise_n = 100000;
  std::uint64_t noise_seed = 5;
  int noise_lanes = 6;
  CLI::App* noise_cmd =
      app.add_subcommand("noise-stats", "empirical OU moments vs the closed form");
  noise_cmd->add_option("--n", noise_n, "number of steps")->check(CLI::PositiveNumber);
  noise_cmd->add_option("--seed", noise_seed, "seed");
  noise_cmd->add_option("--lanes", noise_lanes, "noise lanes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  cutplan::RunConfig cfg;
  if (config_path.empty()) {
    if (const char* env = std::getenv("CUTPLAN_CONFIG")) config_path = env;
  }
  if (!config_path.empty()) cutplan::apply_config_file(cfg, config_path);

  plan_order.board_len_given = plan_cmd->count("--board-len") > 0;
  train_order.board_len_given = train_cmd->count("--board-len") > 0;
  eval_order.board_len_given = eval_cmd->count("--board-len") > 0;
  compare_order.board_len_given = compare_cmd->count("--board-len") > 0;

  if (plan_cmd->parsed())
    return cmd_plan(plan_order, plan_planner, plan_checkpoint, plan_out, cfg, plan_zero_one);
  if (train_cmd->parsed()) {
    if (train_cmd->count("--seed")) cfg.train.seed = train_seed;
    if (train_cmd->count("--episodes")) cfg.train.episodes = train_episodes;
    return cmd_train(train_order, train_out, cfg);
  }
  if (eval_cmd->parsed())
    return cmd_evaluate(eval_order, eval_checkpoint, eval_episodes, eval_out, cfg);
  if (compare_cmd->parsed())
    return cmd_compare(compare_order, compare_planners, compare_seeds, compare_checkpoint,
                       compare_out, cfg);
  if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed, grad_probes, grad_eps);
  if (noise_cmd->parsed()) return cmd_noise_stats(noise_n, noise_seed, noise_lanes, cfg);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const cutplan::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const cutplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
