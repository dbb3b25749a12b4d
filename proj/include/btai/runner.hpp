#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "btai/baseline.hpp"
#include "btai/planner.hpp"

namespace btai {

struct RunConfig {
  std::uint64_t seed = 0;
  bool timing = true;  // false writes NA in time columns

  // Episode world: an ASCII maze, or a model file whose known matrices are
  // used as both the world and the agent's model.
  std::string maze;
  std::size_t maze_actions = 5;
  double noise = 0.0;
  std::string model;
  std::size_t goal_state = 0;  // for model-file worlds
  std::size_t horizon = 30;

  PlannerConfig planner;

  // Benchmark
  std::vector<std::size_t> horizons{4, 5, 6, 7, 8, 9};
  std::size_t bench_states = 8;
  std::size_t bench_obs = 8;
  std::size_t bench_actions = 4;
  double timeout_ms = 60000;
  double min_time_ms = 50;

  // Oracle suite
  std::size_t oracle_models = 20;
  std::size_t oracle_nodes = 100;
  std::size_t oracle_trees = 50;
};

struct EpisodeSummary {
  bool reached_goal = false;
  std::size_t steps = 0;
  double total_cost = 0.0;
  double mean_planning_ms = 0.0;
};

/// Independent random streams for the world and the agent.
Rng world_rng(std::uint64_t seed);
Rng agent_rng(std::uint64_t seed);

/// Runs one episode and writes its CSV trace:
///   step,observation,action,selected_gbar,planning_iterations,wall_time_ms
EpisodeSummary run_episode(const RunConfig& config, std::ostream& csv);
void write_episode_csv(std::ostream& csv, const Episode& episode, bool timing);
EpisodeSummary summarize(const Episode& episode);

/// Timing sweep on a random known model; CSV columns
///   planner,horizon,policies_or_expansions,wall_time_ms,censored
void run_benchmark(const RunConfig& config, std::ostream& csv);
void write_timing_csv(std::ostream& csv, const std::vector<TimingRow>& rows, bool timing);

struct OracleCheck {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
};

/// Cross-checks between the tree planner, the exhaustive planner and
/// recomputations from scratch.
std::vector<OracleCheck> run_oracle_suite(const RunConfig& config);
void write_oracle_report(std::ostream& out, const std::vector<OracleCheck>& checks);

/// 17 significant digits, enough to read back the same double.
std::string format_number(double x);

}  // namespace btai
