#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "btai/inference.hpp"
#include "btai/model.hpp"
#include "btai/tree.hpp"

namespace btai {

class Environment;

enum class CostKind { classic, feef, pcost };
enum class Propagation { forward, backward, min_backward };
enum class ActionRule { softmax_avg_cost, visit_count_max, visit_count_softmax };

CostKind parse_cost_kind(std::string_view s);
Propagation parse_propagation(std::string_view s);
ActionRule parse_action_rule(std::string_view s);
InferenceMode parse_inference_mode(std::string_view s);
FutureBeliefs parse_future_beliefs(std::string_view s);

/// Cost assigned in place of an infinite divergence (a preference of zero
/// for something the agent expects).
inline constexpr double kInfiniteCost = 1e9;

struct PlannerConfig {
  double exploration = 1.0 / std::sqrt(2.0);
  int max_expansions = 100;
  CostKind cost = CostKind::pcost;
  Propagation propagation = Propagation::backward;
  int rollouts = 0;
  int rollout_depth = 0;
  double gamma = 1.0;
  ActionRule action_rule = ActionRule::softmax_avg_cost;
  InferenceSettings inference;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Negative average cost plus exploration * sqrt(ln parent_visits / visits).
double uct_value(const TreeNode& child, long parent_visits, double exploration);

/// Descends from the root along the child with the highest UCT value (ties
/// to the lowest action) until reaching a node without children, which is
/// returned for expansion. A fresh root is returned as is.
TreeNode& select_leaf(TreeNode& root, double exploration);

double evaluate_cost(const TreeNode& node, const Target& target, const GenerativeModel& model,
                     CostKind kind);

/// Mean over `rollouts` of the node cost plus the costs of `rollout_depth`
/// random-action descendants. The descendants are built outside the tree
/// and discarded.
double rollout_average(const TreeNode& node, const GenerativeModel& model, const Target& target,
                       const PlannerConfig& config, Rng& rng);

/// Sets visits and aggregated cost of the freshly expanded `children` (whose
/// local costs are already set) and updates every ancestor.
void propagate(std::span<TreeNode* const> children, Propagation scheme);

/// K iterations of select, expand, infer, evaluate, propagate. The root
/// belief is the present state of `past`; global inference also revisits
/// the past chain.
Tree plan(PastBeliefs& past, const GenerativeModel& model, const Target& target,
          const PlannerConfig& config, Rng& rng);
/// Planning from a bare present belief (no past chain).
Tree plan(const Categorical& present, const GenerativeModel& model, const Target& target,
          const PlannerConfig& config, Rng& rng);

/// Expands every node breadth-first down to `depth`, evaluating and
/// propagating each expansion as planning would.
void expand_fully(Tree& tree, const GenerativeModel& model, const Target& target,
                  const PlannerConfig& config, std::size_t depth, Rng& rng);

/// Action distribution over root children under the configured rule.
std::vector<double> action_probabilities(const TreeNode& root, const PlannerConfig& config);
Action select_action(const TreeNode& root, const PlannerConfig& config, Rng& rng);

struct EpisodeStep {
  std::size_t step = 0;
  std::size_t observation = 0;
  Action action = 0;
  double selected_gbar = 0.0;
  int planning_iterations = 0;
  double wall_time_ms = 0.0;
  Categorical state_belief;
  std::vector<double> root_costs;  // gbar per root child
};

struct Episode {
  std::vector<EpisodeStep> steps;
  bool reached_terminal = false;
  std::size_t final_observation = 0;
  PastBeliefs past;
};

/// Observe, infer, plan, act, repeated up to `horizon` actions or until the
/// environment reports a terminal state. With learning enabled the model's
/// Dirichlet posteriors are updated from the episode at the end.
Episode act_perceive_loop(Environment& env, GenerativeModel& model, const Target& target,
                          const PlannerConfig& config, std::size_t horizon, Rng& env_rng,
                          Rng& agent_rng);

}  // namespace btai
