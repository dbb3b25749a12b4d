#include "btai/planner.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "btai/env.hpp"

namespace btai {

namespace {

[[noreturn]] void bad_choice(std::string_view what, std::string_view value) {
  throw std::invalid_argument("unknown " + std::string(what) + " '" + std::string(value) + "'");
}

double finite_cost(double g) { return std::isfinite(g) ? g : kInfiniteCost; }

// Fills in beliefs and local costs for freshly attached children, then
// propagates them.
void evaluate_expansion(std::span<TreeNode* const> children, PastBeliefs* past, Tree& tree,
                        const GenerativeModel& model, const Target& target, const PlannerConfig& config,
                        Rng& rng) {
  run_inference(model, past, &tree, config.inference, children);
  for (TreeNode* c : children) {
    c->local_cost = config.rollouts > 0 ? rollout_average(*c, model, target, config, rng)
                                        : evaluate_cost(*c, target, model, config.cost);
  }
  propagate(children, config.propagation);
}

Tree plan_from(PastBeliefs* past, const Categorical& present, const GenerativeModel& model,
               const Target& target, const PlannerConfig& config, Rng& rng) {
  config.validate();
  Tree tree(present);
  for (int k = 0; k < config.max_expansions; ++k) {
    TreeNode& leaf = select_leaf(tree.root(), config.exploration);
    const auto children = tree.attach_children(leaf, model);
    evaluate_expansion(children, past, tree, model, target, config, rng);
  }
  return tree;
}

}  // namespace

CostKind parse_cost_kind(std::string_view s) {
  if (s == "classic") return CostKind::classic;
  if (s == "feef") return CostKind::feef;
  if (s == "pcost") return CostKind::pcost;
  bad_choice("cost kind", s);
}

Propagation parse_propagation(std::string_view s) {
  if (s == "forward") return Propagation::forward;
  if (s == "backward") return Propagation::backward;
  if (s == "min_backward") return Propagation::min_backward;
  bad_choice("propagation scheme", s);
}

ActionRule parse_action_rule(std::string_view s) {
  if (s == "softmax_avg_cost") return ActionRule::softmax_avg_cost;
  if (s == "visit_count_max") return ActionRule::visit_count_max;
  if (s == "visit_count_softmax") return ActionRule::visit_count_softmax;
  bad_choice("action rule", s);
}

InferenceMode parse_inference_mode(std::string_view s) {
  if (s == "local") return InferenceMode::local;
  if (s == "global") return InferenceMode::global;
  bad_choice("inference mode", s);
}

FutureBeliefs parse_future_beliefs(std::string_view s) {
  if (s == "variational") return FutureBeliefs::variational;
  if (s == "predictive") return FutureBeliefs::predictive;
  bad_choice("future belief mode", s);
}

void PlannerConfig::validate() const {
  if (!(exploration >= 0.0)) throw std::invalid_argument("exploration constant must be >= 0");
  if (max_expansions < 1) throw std::invalid_argument("max_expansions must be >= 1");
  if (rollouts < 0 || rollout_depth < 0) throw std::invalid_argument("rollout settings must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  inference.validate();
}

double uct_value(const TreeNode& child, long parent_visits, double exploration) {
  if (child.visits < 1 || parent_visits < 1) throw std::logic_error("UCT needs visited nodes");
  return -child.average_cost() +
         exploration * std::sqrt(std::log(double(parent_visits)) / double(child.visits));
}

TreeNode& select_leaf(TreeNode& root, double exploration) {
  TreeNode* node = &root;
  while (!node->is_leaf()) {
    TreeNode* best = nullptr;
    double best_value = -std::numeric_limits<double>::infinity();
    for (auto& c : node->children) {
      const double v = uct_value(*c, node->visits, exploration);
      if (best == nullptr || v > best_value) {
        best = c.get();
        best_value = v;
      }
    }
    node = best;
  }
  return *node;
}

double evaluate_cost(const TreeNode& node, const Target& target, const GenerativeModel& model,
                     CostKind kind) {
  const Categorical& qs = node.state_belief;
  const Categorical& qo = node.obs_belief;
  switch (kind) {
    case CostKind::classic: {
      double ambiguity = 0.0;
      const Tensor& A = model.A_mean();
      const std::size_t n_obs = model.spec().n_obs;
      const std::size_t n_states = model.spec().n_states;
      for (std::size_t s = 0; s < n_states; ++s) {
        double h = 0.0;
        for (std::size_t o = 0; o < n_obs; ++o) {
          const double p = A[o * n_states + s];
          if (p > 0.0) h -= p * std::log(p);
        }
        ambiguity += qs[s] * h;
      }
      return finite_cost(kl_divergence(qo, target.obs) + ambiguity);
    }
    case CostKind::pcost:
      return finite_cost(kl_divergence(qs, target.state) + kl_divergence(qo, target.obs));
    case CostKind::feef: {
      // KL over the joint (obs, state) table, not split into marginals.
      double kl = 0.0;
      for (std::size_t o = 0; o < qo.size(); ++o) {
        for (std::size_t s = 0; s < qs.size(); ++s) {
          const double q = qo[o] * qs[s];
          if (q == 0.0) continue;
          const double v = target.obs[o] * target.state[s];
          if (v == 0.0) return kInfiniteCost;
          kl += q * std::log(q / v);
        }
      }
      return finite_cost(kl);
    }
  }
  throw std::logic_error("unhandled cost kind");
}

double rollout_average(const TreeNode& node, const GenerativeModel& model, const Target& target,
                       const PlannerConfig& config, Rng& rng) {
  const int n_rollouts = std::max(config.rollouts, 1);
  const double own = evaluate_cost(node, target, model, config.cost);
  InferenceSettings local = config.inference;
  local.mode = InferenceMode::local;
  std::uniform_int_distribution<Action> pick(0, model.spec().n_actions - 1);

  double total = 0.0;
  for (int r = 0; r < n_rollouts; ++r) {
    double g = own;
    std::vector<std::unique_ptr<TreeNode>> chain;
    const TreeNode* current = &node;
    for (int k = 0; k < config.rollout_depth; ++k) {
      const Action u = pick(rng);
      auto next = std::make_unique<TreeNode>();
      next->index = current->index.appended(u);
      // The virtual node points at its parent but is never added to the
      // parent's children, so the tree is left untouched.
      next->parent = const_cast<TreeNode*>(current);
      next->state_belief = predict_state(model, current->state_belief, u);
      next->obs_belief = update_future_obs(model, *next);
      TreeNode* raw = next.get();
      run_inference(model, nullptr, nullptr, local, std::span<TreeNode* const>(&raw, 1));
      g += evaluate_cost(*raw, target, model, config.cost);
      chain.push_back(std::move(next));
      current = raw;
    }
    total += g;
  }
  return total / double(n_rollouts);
}

void propagate(std::span<TreeNode* const> children, Propagation scheme) {
  if (children.empty()) return;
  double sibling_min = std::numeric_limits<double>::infinity();
  for (const TreeNode* c : children) sibling_min = std::min(sibling_min, c->local_cost);

  for (TreeNode* c : children) {
    c->visits = 1;
    c->aggregated_cost = c->local_cost;
    if (scheme == Propagation::forward && c->parent != nullptr) {
      c->aggregated_cost += c->parent->aggregated_cost;
    }
    for (TreeNode* a : ancestors(*c)) {
      a->visits += 1;
      switch (scheme) {
        case Propagation::forward:
          break;
        case Propagation::backward:
          a->aggregated_cost += c->local_cost;
          break;
        case Propagation::min_backward:
          a->aggregated_cost += sibling_min;
          break;
      }
    }
  }
}

Tree plan(PastBeliefs& past, const GenerativeModel& model, const Target& target,
          const PlannerConfig& config, Rng& rng) {
  past.validate(model.spec());
  return plan_from(&past, past.states.back(), model, target, config, rng);
}

Tree plan(const Categorical& present, const GenerativeModel& model, const Target& target,
          const PlannerConfig& config, Rng& rng) {
  return plan_from(nullptr, present, model, target, config, rng);
}

void expand_fully(Tree& tree, const GenerativeModel& model, const Target& target,
                  const PlannerConfig& config, std::size_t depth, Rng& rng) {
  config.validate();
  std::deque<TreeNode*> queue{&tree.root()};
  while (!queue.empty()) {
    TreeNode* node = queue.front();
    queue.pop_front();
    if (node->depth() >= depth) continue;
    if (node->is_leaf()) {
      const auto children = tree.attach_children(*node, model);
      evaluate_expansion(children, nullptr, tree, model, target, config, rng);
    }
    for (auto& c : node->children) queue.push_back(c.get());
  }
}

std::vector<double> action_probabilities(const TreeNode& root, const PlannerConfig& config) {
  if (root.children.empty()) throw std::logic_error("no visited children to choose from");
  const std::size_t n = root.children.size();
  std::vector<double> logits(n);
  switch (config.action_rule) {
    case ActionRule::softmax_avg_cost:
      for (std::size_t i = 0; i < n; ++i) logits[i] = -config.gamma * root.children[i]->average_cost();
      break;
    case ActionRule::visit_count_softmax:
      for (std::size_t i = 0; i < n; ++i) logits[i] = double(root.children[i]->visits);
      break;
    case ActionRule::visit_count_max: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        const TreeNode& c = *root.children[i];
        const TreeNode& b = *root.children[best];
        if (c.visits > b.visits || (c.visits == b.visits && c.average_cost() < b.average_cost())) best = i;
      }
      std::vector<double> p(n, 0.0);
      p[best] = 1.0;
      return p;
    }
  }
  const Categorical p = softmax(Tensor::vector(axis::action, std::move(logits)));
  return {p.probs().values().begin(), p.probs().values().end()};
}

Action select_action(const TreeNode& root, const PlannerConfig& config, Rng& rng) {
  const auto p = action_probabilities(root, config);
  std::discrete_distribution<Action> dist(p.begin(), p.end());
  return dist(rng);
}

Episode act_perceive_loop(Environment& env, GenerativeModel& model, const Target& target,
                          const PlannerConfig& config, std::size_t horizon, Rng& env_rng,
                          Rng& agent_rng) {
  config.validate();
  const ModelSpec spec = model.spec();
  if (!(env.spec() == spec)) throw std::invalid_argument("environment and model sizes differ");

  InferenceSettings past_settings = config.inference;
  past_settings.mode = InferenceMode::global;

  Episode episode;
  std::size_t obs = env.reset(env_rng);
  episode.past = PastBeliefs::start(spec, obs);
  for (std::size_t step = 0; step < horizon && !env.terminal(); ++step) {
    const auto started = std::chrono::steady_clock::now();
    run_inference(model, &episode.past, nullptr, past_settings);
    Tree tree = plan(episode.past, model, target, config, agent_rng);
    const Action action = select_action(tree.root(), config, agent_rng);
    const auto finished = std::chrono::steady_clock::now();

    EpisodeStep rec;
    rec.step = step;
    rec.observation = obs;
    rec.action = action;
    rec.selected_gbar = tree.root().children[action]->average_cost();
    rec.planning_iterations = config.max_expansions;
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(finished - started).count();
    rec.state_belief = episode.past.states.back();
    for (const auto& c : tree.root().children) rec.root_costs.push_back(c->average_cost());
    episode.steps.push_back(std::move(rec));

    obs = env.step(action, env_rng);
    episode.past.extend(spec, obs);
  }
  episode.reached_terminal = env.terminal();
  episode.final_observation = obs;
  if (model.learning()) {
    run_inference(model, &episode.past, nullptr, past_settings);
    model = update_dirichlet_posteriors(model, episode.past);
  }
  return episode;
}

}  // namespace btai
