#include "btai/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include "btai/env.hpp"
#include "btai/random_model.hpp"

namespace btai {

namespace {

struct World {
  std::unique_ptr<Environment> env;
  GenerativeModel model;
  Target target;
};

World make_world(const RunConfig& config) {
  if (!config.maze.empty()) {
    MazeSpec maze = MazeSpec::load(config.maze);
    maze.noise = config.noise;
    MazeMatrices m = maze_to_matrices(maze, config.maze_actions);
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    auto env = std::make_unique<MazeEnv>(maze, config.maze_actions);
    GenerativeModel model = GenerativeModel::known(m.A, m.B, m.D);
    Target target = Target::goal(model.spec(), m.goal_state, m.goal_state);
    return {std::move(env), std::move(model), std::move(target)};
  }
  if (!config.model.empty()) {
    std::ifstream in(config.model);
    if (!in) throw std::runtime_error("cannot open model file " + config.model);
    GenerativeModel model = load_model(in);
    if (model.learning()) throw std::runtime_error("a model file used as a world must hold known matrices");
    const ModelSpec& s = model.spec();
    if (config.goal_state >= s.n_states) throw std::runtime_error("goal state out of range");
    // Preferred observation: the one the goal state most likely emits.
    std::size_t goal_obs = 0;
    for (std::size_t o = 1; o < s.n_obs; ++o) {
      if (model.A_mean().at({o, config.goal_state}) > model.A_mean().at({goal_obs, config.goal_state})) {
        goal_obs = o;
      }
    }
    auto env = std::make_unique<PomdpEnv>(model.A_mean(), model.B_mean(), model.D_mean(),
                                          std::vector<std::size_t>{config.goal_state});
    Target target = Target::goal(s, goal_obs, config.goal_state);
    return {std::move(env), std::move(model), std::move(target)};
  }
  throw std::runtime_error("an episode needs a maze or a model file");
}

OracleCheck make_check(std::string name, double tolerance) {
  OracleCheck c;
  c.name = std::move(name);
  c.tolerance = tolerance;
  return c;
}

void record(OracleCheck& c, double error) {
  c.max_error = std::max(c.max_error, std::isnan(error) ? INFINITY : error);
  ++c.cases;
}

void finish(OracleCheck& c) { c.passed = c.cases > 0 && c.max_error <= c.tolerance; }

ModelSpec random_spec(Rng& rng, std::size_t max_size, std::size_t n_actions) {
  std::uniform_int_distribution<std::size_t> size(2, max_size);
  return {size(rng), size(rng), n_actions};
}

// All nodes of the tree including the root, in creation order.
std::vector<const TreeNode*> by_serial(const Tree& tree) {
  std::vector<const TreeNode*> nodes = tree.breadth_first();
  nodes.push_back(&tree.root());
  std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) { return a->serial < b->serial; });
  return nodes;
}

bool descends_from(const TreeNode& node, const TreeNode& ancestor) {
  return ancestor.index.is_strict_prefix_of(node.index);
}

}  // namespace

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Rng world_rng(std::uint64_t seed) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), 1u};
  return Rng(seq);
}

Rng agent_rng(std::uint64_t seed) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), 2u};
  return Rng(seq);
}

void write_episode_csv(std::ostream& csv, const Episode& episode, bool timing) {
  csv << "step,observation,action,selected_gbar,planning_iterations,wall_time_ms\n";
  for (const auto& s : episode.steps) {
    csv << s.step << ',' << s.observation << ',' << s.action << ',' << format_number(s.selected_gbar) << ','
        << s.planning_iterations << ',' << (timing ? format_number(s.wall_time_ms) : "NA") << '\n';
  }
}

EpisodeSummary summarize(const Episode& episode) {
  EpisodeSummary sum;
  sum.reached_goal = episode.reached_terminal;
  sum.steps = episode.steps.size();
  double ms = 0.0;
  for (const auto& s : episode.steps) {
    sum.total_cost += s.selected_gbar;
    ms += s.wall_time_ms;
  }
  sum.mean_planning_ms = episode.steps.empty() ? 0.0 : ms / double(episode.steps.size());
  return sum;
}

EpisodeSummary run_episode(const RunConfig& config, std::ostream& csv) {
  World world = make_world(config);
  Rng env_rng = world_rng(config.seed);
  Rng rng = agent_rng(config.seed);
  const Episode episode =
      act_perceive_loop(*world.env, world.model, world.target, config.planner, config.horizon, env_rng, rng);
  write_episode_csv(csv, episode, config.timing);
  return summarize(episode);
}

void write_timing_csv(std::ostream& csv, const std::vector<TimingRow>& rows, bool timing) {
  csv << "planner,horizon,policies_or_expansions,wall_time_ms,censored\n";
  for (const auto& r : rows) {
    csv << r.planner << ',' << r.horizon << ',' << r.work << ','
        << (timing ? format_number(r.wall_time_ms) : "NA") << ',' << (r.censored ? 1 : 0) << '\n';
  }
}

void run_benchmark(const RunConfig& config, std::ostream& csv) {
  Rng rng = agent_rng(config.seed);
  const ModelSpec spec{config.bench_states, config.bench_obs, config.bench_actions};
  const GenerativeModel model = random_known_model(spec, rng);
  const Target target{random_categorical(axis::obs, spec.n_obs, rng),
                      random_categorical(axis::state, spec.n_states, rng)};
  const Categorical present(model.D_mean());
  TimingOptions options;
  options.timed = config.timing;
  options.timeout_ms = config.timeout_ms;
  options.min_time_ms = config.min_time_ms;
  const auto rows = timing_sweep(model, present, target, config.horizons, config.planner, options, rng);
  write_timing_csv(csv, rows, config.timing);
}

std::vector<OracleCheck> run_oracle_suite(const RunConfig& config) {
  Rng rng = agent_rng(config.seed);
  std::vector<OracleCheck> checks;

  // Exhaustive planner: recursive aggregated cost against the direct sum,
  // and the tree planner's forward-aggregated classic cost at the leaves of
  // a fully expanded tree against the same.
  {
    constexpr std::size_t kHorizon = 3;
    OracleCheck aggregated = make_check("aggregated_equals_efe", 1e-8);
    OracleCheck bridge = make_check("tree_leaf_equals_efe", 1e-8);
    PlannerConfig pc;
    pc.cost = CostKind::classic;
    pc.propagation = Propagation::forward;
    pc.inference.future = FutureBeliefs::predictive;
    for (std::size_t m = 0; m < config.oracle_models; ++m) {
      const GenerativeModel model = random_known_model(random_spec(rng, 4, 2), rng);
      const Categorical present = random_categorical(axis::state, model.spec().n_states, rng);
      const Target target{random_categorical(axis::obs, model.spec().n_obs, rng),
                          Categorical::uniform(axis::state, model.spec().n_states)};
      Tree tree(present);
      expand_fully(tree, model, target, pc, kHorizon, rng);
      for (const TreeNode* n : tree.breadth_first()) {
        if (n->depth() != kHorizon) continue;
        const Policy& policy = n->index.actions();
        const double efe = efe_policy(policy, model, present, target.obs);
        record(aggregated, std::abs(aggregated_cost(policy, model, present, target.obs) - efe));
        record(bridge, std::abs(n->aggregated_cost - efe));
      }
    }
    finish(aggregated);
    finish(bridge);
    checks.push_back(aggregated);
    checks.push_back(bridge);
  }

  // Free energy of the expected future against the pure cost.
  {
    OracleCheck c = make_check("feef_equals_pcost", 1e-12);
    for (std::size_t i = 0; i < config.oracle_nodes; ++i) {
      const ModelSpec spec = random_spec(rng, 5, 2);
      const GenerativeModel model = random_known_model(spec, rng);
      TreeNode node;
      node.state_belief = random_categorical(axis::state, spec.n_states, rng);
      node.obs_belief = random_categorical(axis::obs, spec.n_obs, rng);
      const Target target{random_categorical(axis::obs, spec.n_obs, rng),
                          random_categorical(axis::state, spec.n_states, rng)};
      const double feef = evaluate_cost(node, target, model, CostKind::feef);
      const double pcost = evaluate_cost(node, target, model, CostKind::pcost);
      record(c, std::abs(feef - pcost));
    }
    finish(c);
    checks.push_back(c);
  }

  // Aggregation identities on random planned trees.
  {
    OracleCheck backward = make_check("backward_identity", 1e-12);
    OracleCheck min_backward = make_check("min_backward_identity", 1e-12);
    OracleCheck forward = make_check("forward_identity", 1e-12);
    OracleCheck visits = make_check("visit_counts", 0.0);
    constexpr std::size_t kMaxNodes = 200;
    for (std::size_t t = 0; t < config.oracle_trees; ++t) {
      std::uniform_int_distribution<std::size_t> actions(2, 3);
      const ModelSpec spec = random_spec(rng, 4, actions(rng));
      const GenerativeModel model = random_known_model(spec, rng);
      const Target target{random_categorical(axis::obs, spec.n_obs, rng),
                          random_categorical(axis::state, spec.n_states, rng)};
      const Categorical present = random_categorical(axis::state, spec.n_states, rng);
      PlannerConfig pc;
      std::uniform_int_distribution<int> k((kMaxNodes - 1) / spec.n_actions / 4, (kMaxNodes - 1) / spec.n_actions);
      pc.max_expansions = k(rng);
      std::uniform_real_distribution<double> cp(0.0, 2.0);
      pc.exploration = cp(rng);

      for (Propagation scheme : {Propagation::backward, Propagation::min_backward, Propagation::forward}) {
        pc.propagation = scheme;
        Rng plan_rng = rng;
        const Tree tree = plan(present, model, target, pc, plan_rng);
        const auto nodes = by_serial(tree);

        for (const TreeNode* j : nodes) {
          double expected = j->local_cost;
          if (scheme == Propagation::backward) {
            for (const TreeNode* k2 : nodes) {
              if (descends_from(*k2, *j)) expected += k2->local_cost;
            }
          } else if (scheme == Propagation::min_backward) {
            // Every expansion at or below J adds the cheapest new child's
            // cost once per new child.
            for (const TreeNode* k2 : nodes) {
              if (k2->is_leaf() || !(k2 == j || descends_from(*k2, *j))) continue;
              double lowest = INFINITY;
              for (const auto& c : k2->children) lowest = std::min(lowest, c->local_cost);
              for (std::size_t a = 0; a < k2->children.size(); ++a) expected += lowest;
            }
          } else {
            expected = 0.0;
            for (const TreeNode* k2 : nodes) {
              if (k2 != &tree.root() && (k2 == j || descends_from(*j, *k2))) expected += k2->local_cost;
            }
          }
          OracleCheck& c = scheme == Propagation::backward       ? backward
                           : scheme == Propagation::min_backward ? min_backward
                                                                 : forward;
          record(c, std::abs(j->aggregated_cost - expected));

          if (!j->is_leaf()) {
            long child_visits = 0;
            for (const auto& ch : j->children) child_visits += ch->visits;
            const long own = j == &tree.root() ? 0 : 1;
            record(visits, std::abs(double(child_visits + own - j->visits)));
          }
        }
        record(visits, std::abs(double(tree.root().visits) - double(pc.max_expansions * spec.n_actions)));
      }
    }
    for (auto* c : {&backward, &min_backward, &forward, &visits}) {
      finish(*c);
      checks.push_back(*c);
    }
  }
  return checks;
}

void write_oracle_report(std::ostream& out, const std::vector<OracleCheck>& checks) {
  out << "check,result,cases,max_error,tolerance\n";
  for (const auto& c : checks) {
    out << c.name << ',' << (c.passed ? "pass" : "fail") << ',' << c.cases << ','
        << format_number(c.max_error) << ',' << format_number(c.tolerance) << '\n';
  }
}

}  // namespace btai
