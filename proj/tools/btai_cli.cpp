// Command-line runner: episodes, timing benchmark, oracle checks.
//
//   btai episode   --env.maze maze.txt --planner.expansions 64 --out trace.csv
//   btai benchmark --bench.horizons 4 5 6 --out timing.csv
//   btai oracle
//
// Every option can also come from an INI file given with --config, where
// section [planner] key cost=... sets --planner.cost. Flags override the
// file.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "btai/runner.hpp"

namespace {

const std::vector<std::string> kCosts{"classic", "feef", "pcost"};
const std::vector<std::string> kSchemes{"forward", "backward", "min_backward"};
const std::vector<std::string> kRules{"softmax_avg_cost", "visit_count_max", "visit_count_softmax"};
const std::vector<std::string> kModes{"local", "global"};
const std::vector<std::string> kFuture{"variational", "predictive"};

// INI reader that turns "[planner] cost=x" into the option "planner.cost"
// instead of treating the section as a subcommand.
class FlatIni : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> flat;
    for (auto& item : CLI::ConfigINI::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      std::string name;
      for (const auto& p : item.parents) name += p + '.';
      item.name = name + item.name;
      item.parents.clear();
      flat.push_back(std::move(item));
    }
    return flat;
  }
};

struct Choices {
  std::string cost = "pcost";
  std::string propagation = "backward";
  std::string action_rule = "softmax_avg_cost";
  std::string mode = "local";
  std::string future = "variational";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-search active inference planner"};
  app.fallthrough();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<FlatIni>());
  app.set_config("--config", "", "INI file with option defaults");
  app.allow_config_extras(CLI::config_extras_mode::error);

  btai::RunConfig cfg;
  Choices ch;
  std::string out_path;
  bool no_timing = false;

  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_flag("--no-timing", no_timing, "write NA instead of wall times");

  app.add_option("--env.maze", cfg.maze, "ASCII maze file")->check(CLI::ExistingFile);
  app.add_option("--env.actions", cfg.maze_actions, "maze actions, 4 or 5")->check(CLI::IsMember({4, 5}));
  app.add_option("--env.noise", cfg.noise, "chance of observing a wrong cell")->check(CLI::Range(0.0, 0.999999));
  app.add_option("--env.model", cfg.model, "model file with known matrices")->check(CLI::ExistingFile);
  app.add_option("--env.goal", cfg.goal_state, "goal state of a model-file world");
  app.add_option("--env.horizon", cfg.horizon, "maximum number of actions");

  auto& pc = cfg.planner;
  app.add_option("--planner.cost", ch.cost, "cost variant")->check(CLI::IsMember(kCosts));
  app.add_option("--planner.propagation", ch.propagation, "cost propagation")->check(CLI::IsMember(kSchemes));
  app.add_option("--planner.expansions", pc.max_expansions, "expansions per planning step")->check(CLI::PositiveNumber);
  app.add_option("--planner.cp", pc.exploration, "UCT exploration constant")->check(CLI::NonNegativeNumber);
  app.add_option("--planner.rollouts", pc.rollouts, "rollouts per new node")->check(CLI::NonNegativeNumber);
  app.add_option("--planner.rollout_depth", pc.rollout_depth, "random steps per rollout")->check(CLI::NonNegativeNumber);
  app.add_option("--planner.gamma", pc.gamma, "action precision")->check(CLI::PositiveNumber);
  app.add_option("--planner.action_rule", ch.action_rule, "action selection")->check(CLI::IsMember(kRules));

  auto& inf = pc.inference;
  app.add_option("--inference.mode", ch.mode, "local or global")->check(CLI::IsMember(kModes));
  app.add_option("--inference.future", ch.future, "future beliefs")->check(CLI::IsMember(kFuture));
  app.add_option("--inference.max_sweeps", inf.max_sweeps, "sweep limit")->check(CLI::PositiveNumber);
  app.add_option("--inference.tolerance", inf.vfe_tolerance, "free energy tolerance")->check(CLI::PositiveNumber);

  app.add_option("--bench.horizons", cfg.horizons, "horizons to time");
  app.add_option("--bench.states", cfg.bench_states, "states of the random model")->check(CLI::PositiveNumber);
  app.add_option("--bench.obs", cfg.bench_obs, "observations of the random model")->check(CLI::PositiveNumber);
  app.add_option("--bench.actions", cfg.bench_actions, "actions of the random model")->check(CLI::PositiveNumber);
  app.add_option("--bench.timeout_ms", cfg.timeout_ms, "per-cell timeout")->check(CLI::PositiveNumber);
  app.add_option("--bench.min_time_ms", cfg.min_time_ms, "minimum measured time per cell");

  app.add_option("--oracle.models", cfg.oracle_models, "random models for the equivalence checks");
  app.add_option("--oracle.nodes", cfg.oracle_nodes, "random nodes for the cost checks");
  app.add_option("--oracle.trees", cfg.oracle_trees, "random trees for the aggregation checks");

  auto* episode = app.add_subcommand("episode", "run one episode and write its trace");
  auto* benchmark = app.add_subcommand("benchmark", "time exhaustive and tree planning");
  auto* oracle = app.add_subcommand("oracle", "run the equivalence checks");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.timing = !no_timing;
    pc.cost = btai::parse_cost_kind(ch.cost);
    pc.propagation = btai::parse_propagation(ch.propagation);
    pc.action_rule = btai::parse_action_rule(ch.action_rule);
    inf.mode = btai::parse_inference_mode(ch.mode);
    inf.future = btai::parse_future_beliefs(ch.future);
    pc.validate();

    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;

    if (episode->parsed()) {
      const auto s = btai::run_episode(cfg, out);
      std::cerr << "steps_to_goal=" << (s.reached_goal ? std::to_string(s.steps) : "NA")
                << " total_cost=" << btai::format_number(s.total_cost)
                << " mean_planning_ms=" << (cfg.timing ? btai::format_number(s.mean_planning_ms) : "NA") << '\n';
    } else if (benchmark->parsed()) {
      btai::run_benchmark(cfg, out);
    } else if (oracle->parsed()) {
      const auto checks = btai::run_oracle_suite(cfg);
      btai::write_oracle_report(out, checks);
      for (const auto& c : checks) {
        if (!c.passed) return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
