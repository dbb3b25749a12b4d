#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "btai/env.hpp"
#include "btai/planner.hpp"
#include "btai/random_model.hpp"

using namespace btai;

namespace {

Tensor swap_B() {
  Tensor B = Tensor::zeros({{"next", 2}, {"state", 2}, {"action", 2}});
  B.at({0, 0, 0}) = B.at({1, 1, 0}) = 1.0;
  B.at({1, 0, 1}) = B.at({0, 1, 1}) = 1.0;
  return B;
}

Tensor identity_A(std::size_t n) {
  Tensor A = Tensor::zeros({{"obs", n}, {"state", n}});
  for (std::size_t i = 0; i < n; ++i) A.at({i, i}) = 1.0;
  return A;
}

// Two states; action 0 stays, action 1 swaps. The goal is state 1.
GenerativeModel two_state_goal_model() {
  return GenerativeModel::known(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
}

Target soft_goal() {
  return Target{Categorical(Tensor::vector("obs", {0.1, 0.9})), Categorical(Tensor::vector("state", {0.1, 0.9}))};
}

// Two-child root with costs set by hand.
Tree costed_root(double g0, double g1, long n0 = 1, long n1 = 1) {
  Tree tree(Categorical::one_hot("state", 2, 0));
  tree.attach_children(tree.root(), two_state_goal_model());
  auto& c = tree.root().children;
  c[0]->visits = n0;
  c[0]->aggregated_cost = g0 * double(n0);
  c[1]->visits = n1;
  c[1]->aggregated_cost = g1 * double(n1);
  tree.root().visits = n0 + n1;
  return tree;
}

double subtree_local_sum(const TreeNode& n) {
  double s = n.local_cost;
  for (const auto& c : n.children) s += subtree_local_sum(*c);
  return s;
}

long subtree_size(const TreeNode& n) {
  long s = 1;
  for (const auto& c : n.children) s += subtree_size(*c);
  return s;
}

}  // namespace

TEST_CASE("uct value") {
  Tree tree = costed_root(2.0, 0.0);
  CHECK(uct_value(*tree.root().children[0], 2, 0.0) == -2.0);
  // Visit counts are integers, so check the exploration term at n = 7.
  Tree t2 = costed_root(0.0, 0.0);
  CHECK(uct_value(*t2.root().children[0], 7, 1.0) == doctest::Approx(std::sqrt(std::log(7.0))).epsilon(1e-15));
  Tree t3 = costed_root(0.5, 0.0, 4, 1);
  CHECK(uct_value(*t3.root().children[0], 5, 2.0) == doctest::Approx(-0.5 + 2.0 * std::sqrt(std::log(5.0) / 4.0)));
}

TEST_CASE("select leaf") {
  SUBCASE("fresh root") {
    Tree tree(Categorical::uniform("state", 2));
    CHECK(&select_leaf(tree.root(), 1.0) == &tree.root());
  }
  SUBCASE("pure exploitation picks the cheaper child") {
    Tree tree = costed_root(1.0, 3.0);
    CHECK(&select_leaf(tree.root(), 0.0) == tree.root().children[0].get());
    Tree flipped = costed_root(3.0, 1.0);
    CHECK(&select_leaf(flipped.root(), 0.0) == flipped.root().children[1].get());
  }
  SUBCASE("ties go to the lowest action") {
    Tree tree = costed_root(2.0, 2.0);
    CHECK(&select_leaf(tree.root(), 0.7) == tree.root().children[0].get());
  }
  SUBCASE("path equals argmax UCT recomputed at each level") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> cost(0.0, 5.0);
    for (int trial = 0; trial < 30; ++trial) {
      const auto m = random_known_model({3, 3, 3}, rng);
      PlannerConfig cfg;
      cfg.max_expansions = 12;
      cfg.exploration = 0.5 + 0.1 * trial;
      const Target tgt{random_categorical("obs", 3, rng), random_categorical("state", 3, rng)};
      Tree tree = plan(random_categorical("state", 3, rng), m, tgt, cfg, rng);
      const TreeNode* expect = &tree.root();
      while (!expect->is_leaf()) {
        const TreeNode* best = nullptr;
        double best_v = -INFINITY;
        for (const auto& c : expect->children) {
          const double v = -c->average_cost() + cfg.exploration * std::sqrt(std::log(double(expect->visits)) / double(c->visits));
          if (v > best_v) {
            best_v = v;
            best = c.get();
          }
        }
        expect = best;
      }
      CHECK(&select_leaf(tree.root(), cfg.exploration) == expect);
    }
  }
  SUBCASE("a constant shift of every cost keeps the path") {
    std::mt19937_64 rng(32);
    const auto m = random_known_model({3, 3, 2}, rng);
    PlannerConfig cfg;
    cfg.max_expansions = 10;
    const Target tgt{random_categorical("obs", 3, rng), random_categorical("state", 3, rng)};
    Tree tree = plan(random_categorical("state", 3, rng), m, tgt, cfg, rng);
    const TreeNode* before = &select_leaf(tree.root(), 0.0);
    for (TreeNode* n : tree.breadth_first()) n->aggregated_cost += 7.0 * double(n->visits);
    CHECK(&select_leaf(tree.root(), 0.0) == before);
  }
}

TEST_CASE("cost variants") {
  std::mt19937_64 rng(41);
  SUBCASE("classic is zero with matched predictions and deterministic likelihood") {
    const auto m = GenerativeModel::known(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
    Tree tree(Categorical(Tensor::vector("state", {0.3, 0.7})));
    auto kids = tree.attach_children(tree.root(), m);
    const Target tgt{kids[0]->obs_belief, kids[0]->state_belief};
    CHECK(std::abs(evaluate_cost(*kids[0], tgt, m, CostKind::classic)) < 1e-12);
  }
  SUBCASE("feef equals pcost") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto m = random_known_model({3, 4, 2}, rng);
      Tree tree(random_categorical("state", 3, rng));
      auto kids = tree.attach_children(tree.root(), m);
      const Target tgt{random_categorical("obs", 4, rng), random_categorical("state", 3, rng)};
      const double f = evaluate_cost(*kids[1], tgt, m, CostKind::feef);
      const double p = evaluate_cost(*kids[1], tgt, m, CostKind::pcost);
      CHECK(std::abs(f - p) <= 1e-12 * std::max(1.0, std::abs(p)));
    }
  }
  SUBCASE("classic matches explicit sums on random three-state nodes") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto m = random_known_model({3, 3, 2}, rng);
      Tree tree(random_categorical("state", 3, rng));
      auto kids = tree.attach_children(tree.root(), m);
      const Target tgt{random_categorical("obs", 3, rng), Categorical::uniform("state", 3)};
      const TreeNode& n = *kids[0];
      double risk = 0.0, ambiguity = 0.0;
      for (std::size_t o = 0; o < 3; ++o) risk += n.obs_belief[o] * (std::log(n.obs_belief[o]) - std::log(tgt.obs[o]));
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t o = 0; o < 3; ++o) {
          const double a = m.A_mean().at({o, s});
          ambiguity -= n.state_belief[s] * a * std::log(a);
        }
      CHECK(std::abs(evaluate_cost(n, tgt, m, CostKind::classic) - (risk + ambiguity)) < 1e-12);
    }
  }
  SUBCASE("zero-support preferences are clamped") {
    const auto m = two_state_goal_model();
    Tree tree(Categorical::one_hot("state", 2, 0));
    auto kids = tree.attach_children(tree.root(), m);
    const Target tgt = Target::goal(m.spec(), 1, 1);
    CHECK(evaluate_cost(*kids[0], tgt, m, CostKind::pcost) == kInfiniteCost);
    CHECK(evaluate_cost(*kids[1], tgt, m, CostKind::pcost) == 0.0);
  }
}

TEST_CASE("rollouts") {
  std::mt19937_64 rng(51);
  const auto m = random_known_model({3, 3, 2}, rng);
  const Target tgt{random_categorical("obs", 3, rng), random_categorical("state", 3, rng)};
  Tree tree(random_categorical("state", 3, rng));
  auto kids = tree.attach_children(tree.root(), m);
  PlannerConfig cfg;
  cfg.inference.future = FutureBeliefs::predictive;

  SUBCASE("one rollout of depth zero is the node cost") {
    cfg.rollouts = 1;
    CHECK(rollout_average(*kids[0], m, tgt, cfg, rng) == evaluate_cost(*kids[0], tgt, m, cfg.cost));
  }
  SUBCASE("zero cost when the target matches every prediction") {
    const auto still = GenerativeModel::known(identity_A(2),
                                              Tensor::filled({{"next", 2}, {"state", 2}, {"action", 2}}, 0.5),
                                              Tensor::vector("state", {0.5, 0.5}));
    Tree t(Categorical::uniform("state", 2));
    auto k = t.attach_children(t.root(), still);
    cfg.rollouts = 5;
    cfg.rollout_depth = 3;
    const Target flat{Categorical::uniform("obs", 2), Categorical::uniform("state", 2)};
    CHECK(std::abs(rollout_average(*k[0], still, flat, cfg, rng)) < 1e-12);
  }
  SUBCASE("single-step average matches enumeration of both continuations") {
    const double own = evaluate_cost(*kids[0], tgt, m, cfg.cost);
    auto grand = tree.attach_children(*kids[0], m);
    run_inference(m, nullptr, nullptr, cfg.inference, grand);
    const double g0 = evaluate_cost(*grand[0], tgt, m, cfg.cost);
    const double g1 = evaluate_cost(*grand[1], tgt, m, cfg.cost);
    const double mean = own + 0.5 * (g0 + g1);
    const double sd_one = 0.5 * std::abs(g0 - g1);
    cfg.rollouts = 1000;
    cfg.rollout_depth = 1;
    const double got = rollout_average(*kids[0], m, tgt, cfg, rng);
    CHECK(std::abs(got - mean) <= 3.0 * sd_one / std::sqrt(1000.0) + 1e-12);
  }
  SUBCASE("rollouts leave the tree untouched") {
    cfg.rollouts = 4;
    cfg.rollout_depth = 4;
    rollout_average(*kids[1], m, tgt, cfg, rng);
    CHECK(kids[1]->is_leaf());
    CHECK(tree.node_count() == 3);
  }
}

TEST_CASE("propagation") {
  const auto m = two_state_goal_model();
  SUBCASE("forward adds the parent's aggregate") {
    Tree tree(Categorical::one_hot("state", 2, 0));
    auto kids = tree.attach_children(tree.root(), m);
    kids[0]->local_cost = 1.0;
    kids[1]->local_cost = 4.0;
    propagate(kids, Propagation::forward);
    CHECK(kids[0]->aggregated_cost == 1.0);
    CHECK(tree.root().aggregated_cost == 0.0);
    CHECK(tree.root().visits == 2);
    auto grand = tree.attach_children(*kids[0], m);
    grand[0]->local_cost = 2.0;
    grand[1]->local_cost = 3.0;
    propagate(grand, Propagation::forward);
    CHECK(grand[1]->aggregated_cost == 4.0);
  }
  SUBCASE("backward adds to every ancestor") {
    Tree tree(Categorical::one_hot("state", 2, 0));
    auto kids = tree.attach_children(tree.root(), m);
    kids[0]->local_cost = kids[1]->local_cost = 0.0;
    propagate(kids, Propagation::backward);
    auto grand = tree.attach_children(*kids[0], m);
    grand[0]->local_cost = 2.0;
    grand[1]->local_cost = 0.0;
    propagate(grand, Propagation::backward);
    CHECK(kids[0]->aggregated_cost == 2.0);
    CHECK(tree.root().aggregated_cost == 2.0);
    CHECK(kids[0]->visits == 3);
    CHECK(tree.root().visits == 4);
  }
  SUBCASE("min backward adds the cheapest sibling once per child") {
    Tree tree(Categorical::one_hot("state", 2, 0));
    auto kids = tree.attach_children(tree.root(), m);
    kids[0]->local_cost = 1.0;
    kids[1]->local_cost = 5.0;
    propagate(kids, Propagation::min_backward);
    CHECK(tree.root().aggregated_cost == 2.0);
    CHECK(kids[1]->aggregated_cost == 5.0);
  }
  SUBCASE("identities on fully expanded and planned trees") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
      const auto r = random_known_model({3, 3, 2}, rng);
      const Target tgt{random_categorical("obs", 3, rng), random_categorical("state", 3, rng)};
      PlannerConfig cfg;
      cfg.max_expansions = 25;
      Tree full(random_categorical("state", 3, rng));
      expand_fully(full, r, tgt, cfg, 2, rng);
      CHECK(full.node_count() == 7);
      for (const TreeNode* n : full.breadth_first())
        CHECK(std::abs(n->aggregated_cost - subtree_local_sum(*n)) <= 1e-12 * std::max(1.0, n->aggregated_cost));

      Tree planned = plan(random_categorical("state", 3, rng), r, tgt, cfg, rng);
      for (const TreeNode* n : planned.breadth_first()) {
        CHECK(std::abs(n->aggregated_cost - subtree_local_sum(*n)) <= 1e-12 * std::max(1.0, n->aggregated_cost));
        CHECK(n->visits == subtree_size(*n));
      }
      CHECK(planned.root().visits == long(2 * cfg.max_expansions));

      cfg.propagation = Propagation::forward;
      Tree fwd = plan(random_categorical("state", 3, rng), r, tgt, cfg, rng);
      for (const TreeNode* n : fwd.breadth_first()) {
        double path = 0.0;
        for (const TreeNode* p = n; p->parent != nullptr; p = p->parent) path += p->local_cost;
        CHECK(std::abs(n->aggregated_cost - path) <= 1e-12 * std::max(1.0, path));
      }
    }
  }
}

TEST_CASE("plan") {
  const auto m = two_state_goal_model();
  Rng rng(71);
  SUBCASE("one expansion adds the root children") {
    PlannerConfig cfg;
    cfg.max_expansions = 1;
    const Tree tree = plan(Categorical::one_hot("state", 2, 0), m, soft_goal(), cfg, rng);
    CHECK(tree.root().children.size() == 2);
    CHECK(tree.node_count() == 3);
  }
  SUBCASE("goal-ward action has the lowest average cost") {
    PlannerConfig cfg;
    cfg.max_expansions = 8;
    const Tree tree = plan(Categorical::one_hot("state", 2, 0), m, soft_goal(), cfg, rng);
    CHECK(tree.root().children[1]->average_cost() < tree.root().children[0]->average_cost());
  }
  SUBCASE("identical seeds give identical trees") {
    std::mt19937_64 mrng(5);
    const auto r = random_known_model({4, 3, 3}, mrng);
    const Target tgt{random_categorical("obs", 3, mrng), random_categorical("state", 4, mrng)};
    const auto present = random_categorical("state", 4, mrng);
    PlannerConfig cfg;
    cfg.max_expansions = 30;
    cfg.rollouts = 3;
    cfg.rollout_depth = 2;
    Rng a(9), b(9);
    std::ostringstream da, db;
    plan(present, r, tgt, cfg, a).dump(da);
    plan(present, r, tgt, cfg, b).dump(db);
    CHECK(da.str() == db.str());
  }
}

TEST_CASE("action selection") {
  PlannerConfig cfg;
  SUBCASE("equal costs give a uniform distribution") {
    const Tree tree = costed_root(0.0, 0.0);
    const auto p = action_probabilities(tree.root(), cfg);
    CHECK(p[0] == doctest::Approx(0.5));
  }
  SUBCASE("visit count maximum") {
    cfg.action_rule = ActionRule::visit_count_max;
    const Tree tree = costed_root(1.0, 0.0, 5, 3);
    Rng rng(1);
    CHECK(select_action(tree.root(), cfg, rng) == 0);
    const Tree tie = costed_root(1.0, 0.5, 4, 4);
    CHECK(select_action(tie.root(), cfg, rng) == 1);
  }
  SUBCASE("visit count softmax") {
    cfg.action_rule = ActionRule::visit_count_softmax;
    const Tree tree = costed_root(0.0, 0.0, 2, 1);
    const auto p = action_probabilities(tree.root(), cfg);
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)));
  }
  SUBCASE("sampling frequencies") {
    cfg.gamma = 1.5;
    const Tree tree = costed_root(0.2, 0.9);
    const auto p = action_probabilities(tree.root(), cfg);
    CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.5 * 0.7))));
    Rng rng(3);
    const int n = 100000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += select_action(tree.root(), cfg, rng) == 0;
    const double sd = std::sqrt(n * p[0] * (1 - p[0]));
    CHECK(std::abs(zeros - n * p[0]) <= 3 * sd);
  }
  SUBCASE("no children") {
    Tree tree(Categorical::uniform("state", 2));
    CHECK_THROWS(action_probabilities(tree.root(), cfg));
  }
}

TEST_CASE("act-perceive loop") {
  SUBCASE("horizon zero") {
    auto m = two_state_goal_model();
    PomdpEnv env(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
    Rng w(1), a(2);
    const auto ep = act_perceive_loop(env, m, soft_goal(), PlannerConfig{}, 0, w, a);
    CHECK(ep.steps.empty());
  }
  SUBCASE("single-state world") {
    auto m = GenerativeModel::known(Tensor({{"obs", 1}, {"state", 1}}, {1.0}),
                                    Tensor::filled({{"next", 1}, {"state", 1}, {"action", 2}}, 1.0),
                                    Tensor::vector("state", {1.0}));
    PomdpEnv env(m.A_mean(), m.B_mean(), m.D_mean());
    Rng w(1), a(2);
    PlannerConfig cfg;
    cfg.max_expansions = 3;
    const auto ep = act_perceive_loop(env, m, Target::uniform(m.spec()), cfg, 4, w, a);
    REQUIRE(ep.steps.size() == 4);
    for (const auto& s : ep.steps) CHECK(s.state_belief[0] == 1.0);
  }
  SUBCASE("goal is a terminal state") {
    auto m = two_state_goal_model();
    PomdpEnv env(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}), {1});
    Rng w(1), a(2);
    PlannerConfig cfg;
    cfg.max_expansions = 8;
    cfg.gamma = 20;
    const auto ep = act_perceive_loop(env, m, soft_goal(), cfg, 10, w, a);
    CHECK(ep.reached_terminal);
    CHECK(ep.steps.size() == 1);
    CHECK(ep.steps[0].action == 1);
  }
  SUBCASE("mismatched sizes are rejected") {
    auto m = two_state_goal_model();
    PomdpEnv env(identity_A(3), Tensor::filled({{"next", 3}, {"state", 3}, {"action", 2}}, 1.0 / 3),
                 Tensor::vector("state", {1, 0, 0}));
    Rng w(1), a(2);
    CHECK_THROWS(act_perceive_loop(env, m, soft_goal(), PlannerConfig{}, 3, w, a));
  }
  SUBCASE("corridor maze") {
    const MazeSpec maze = MazeSpec::load(TEST_DATA_DIR "/corridor.txt");
    const auto mats = maze_to_matrices(maze, 4);
    MazeEnv env(maze, 4);
    auto m = GenerativeModel::known(mats.A, mats.B, mats.D);
    const Target tgt = Target::goal(m.spec(), mats.goal_state, mats.goal_state);
    PlannerConfig cfg;
    cfg.max_expansions = 4;
    cfg.gamma = 2;
    Rng w(1), a(2);
    const auto ep = act_perceive_loop(env, m, tgt, cfg, 5, w, a);
    CHECK(ep.reached_terminal);
    CHECK(ep.steps.size() == 1);
  }
}
