#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "btai/baseline.hpp"
#include "btai/random_model.hpp"

using namespace btai;

namespace {

Tensor identity_A(std::size_t n) {
  Tensor A = Tensor::zeros({{"obs", n}, {"state", n}});
  for (std::size_t i = 0; i < n; ++i) A.at({i, i}) = 1.0;
  return A;
}

Tensor swap_B() {
  Tensor B = Tensor::zeros({{"next", 2}, {"state", 2}, {"action", 2}});
  B.at({0, 0, 0}) = B.at({1, 1, 0}) = 1.0;
  B.at({1, 0, 1}) = B.at({0, 1, 1}) = 1.0;
  return B;
}

double kl(const std::vector<double>& q, const Categorical& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0) s += q[i] * (std::log(q[i]) - std::log(p[i]));
  return s;
}


// Next-state distribution from a one-hot state.
std::vector<double> column(const GenerativeModel& m, std::size_t s, Action u) {
  std::vector<double> out(m.spec().n_states);
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = m.B_mean().at({x, s, u});
  return out;
}

// Independent recursion written against plain vectors.
double si_oracle(std::size_t s, Action u, const GenerativeModel& m, const Categorical& v, std::size_t depth) {
  const auto next = column(m, s, u);
  double g = kl(next, v);
  if (depth == 1) return g;
  const std::size_t S = m.spec().n_states, U = m.spec().n_actions;
  for (std::size_t x = 0; x < S; ++x) {
    if (next[x] == 0.0) continue;
    std::vector<double> costs(U);
    for (Action w = 0; w < U; ++w) costs[w] = si_oracle(x, w, m, v, depth - 1);
    const double best = *std::min_element(costs.begin(), costs.end());
    double sum = 0.0;
    int count = 0;
    for (double c : costs)
      if (c <= best + 1e-12) {
        sum += c;
        ++count;
      }
    g += next[x] * sum / count;
  }
  return g;
}

}  // namespace

TEST_CASE("policy enumeration") {
  CHECK(policy_count(2, 1) == 2);
  CHECK(policy_count(4, 6) == 4096);
  const auto ps = enumerate_policies(3, 2);
  REQUIRE(ps.size() == 9);
  CHECK(ps.front() == Policy{0, 0});
  CHECK(ps[1] == Policy{0, 1});
  CHECK(ps.back() == Policy{2, 2});
  for (std::size_t h = 1; h <= 5; ++h) CHECK(enumerate_policies(2, h).size() == policy_count(2, h));
}

TEST_CASE("rollforward beliefs") {
  SUBCASE("deterministic chain") {
    const auto m = GenerativeModel::known(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
    const auto r = rollforward_beliefs({1, 1, 0, 1}, m, Categorical::one_hot("state", 2, 0));
    CHECK(r.states[0][1] == 1.0);
    CHECK(r.states[1][0] == 1.0);
    CHECK(r.states[2][0] == 1.0);
    CHECK(r.states[3][1] == 1.0);
  }
  SUBCASE("uniform transitions") {
    const auto m = GenerativeModel::known(identity_A(3),
                                          Tensor::filled({{"next", 3}, {"state", 3}, {"action", 2}}, 1.0 / 3),
                                          Tensor::vector("state", {1, 0, 0}));
    const auto r = rollforward_beliefs({0, 1}, m, Categorical::one_hot("state", 3, 2));
    for (const auto& s : r.states)
      for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(1.0 / 3));
  }
  SUBCASE("marginals of the enumerated joint") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_known_model({2, 2, 2}, rng);
      const auto present = random_categorical("state", 2, rng);
      const Policy pi{Action(trial % 2), Action(trial / 2 % 2)};
      const auto r = rollforward_beliefs(pi, m, present);
      std::vector<double> s1(2, 0.0), s2(2, 0.0), o2(2, 0.0);
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t o = 0; o < 2; ++o) {
              const double p = present[a] * m.B_mean().at({b, a, pi[0]}) * m.B_mean().at({c, b, pi[1]}) *
                               m.A_mean().at({o, c});
              s1[b] += p;
              s2[c] += p;
              o2[o] += p;
            }
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(r.states[0][i] - s1[i]) < 1e-12);
        CHECK(std::abs(r.states[1][i] - s2[i]) < 1e-12);
        CHECK(std::abs(r.obs[1][i] - o2[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("expected free energy of a policy") {
  SUBCASE("matched preferences and deterministic likelihood") {
    const auto m = GenerativeModel::known(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
    const auto present = Categorical(Tensor::vector("state", {0.4, 0.6}));
    const Policy pi{1};
    const auto r = rollforward_beliefs(pi, m, present);
    CHECK(std::abs(efe_policy(pi, m, present, r.obs[0])) < 1e-14);
  }
  SUBCASE("single step closed form") {
    const auto m = GenerativeModel::known(identity_A(2), swap_B(), Tensor::vector("state", {1, 0}));
    const double g = efe_policy({0}, m, Categorical::one_hot("state", 2, 0), Categorical::uniform("obs", 2));
    CHECK(g == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
  }
  SUBCASE("sum of localized costs and the recursive aggregate") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = random_known_model({3, 3, 2}, rng);
      const auto present = random_categorical("state", 3, rng);
      const auto pref = random_categorical("obs", 3, rng);
      for (const Policy& pi : enumerate_policies(2, 3)) {
        double sum = 0.0;
        for (std::size_t n = 1; n <= pi.size(); ++n)
          sum += localized_cost(Policy(pi.begin(), pi.begin() + long(n)), m, present, pref);
        const double g = efe_policy(pi, m, present, pref);
        CHECK(std::abs(sum - g) < 1e-12);
        CHECK(std::abs(aggregated_cost(pi, m, present, pref) - g) < 1e-12);
      }
    }
  }
  SUBCASE("base cases") {
    std::mt19937_64 rng(24);
    const auto m = random_known_model({3, 3, 2}, rng);
    const auto present = random_categorical("state", 3, rng);
    const auto pref = random_categorical("obs", 3, rng);
    CHECK(aggregated_cost({}, m, present, pref) == 0.0);
    CHECK(aggregated_cost({1}, m, present, pref) == localized_cost({1}, m, present, pref));
    CHECK(localized_cost({1}, m, present, pref) == doctest::Approx(efe_policy({1}, m, present, pref)).epsilon(1e-14));
    CHECK_THROWS(localized_cost({}, m, present, pref));
  }
  CHECK_THROWS(efe_policy({0}, GenerativeModel::with_priors({2, 2, 2}), Categorical::uniform("state", 2),
                          Categorical::uniform("obs", 2)));
}

TEST_CASE("model-average action") {
  CHECK(bma_select_action({{1, 0}}, {1.0}, 2) == 1);
  CHECK(bma_select_action({{0}, {1}}, {0.5, 0.5}, 2) == 0);
  CHECK_THROWS(bma_select_action({}, {}, 2));

  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> g(0.0, 4.0);
  const auto policies = enumerate_policies(3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> efe(policies.size());
    for (double& x : efe) x = g(rng);
    const auto post = policy_posterior(efe, 1.3);
    std::vector<double> mass(3, 0.0);
    for (std::size_t i = 0; i < policies.size(); ++i) mass[policies[i][0]] += post[i];
    const Action expect = Action(std::max_element(mass.begin(), mass.end()) - mass.begin());
    CHECK(bma_select_action(policies, post, 3) == expect);
    std::vector<double> shifted = efe;
    for (double& x : shifted) x += 11.0;
    CHECK(bma_select_action(policies, policy_posterior(shifted, 1.3), 3) == expect);
  }
}

TEST_CASE("state-action recursion") {
  std::mt19937_64 rng(43);
  SUBCASE("depth one is the divergence of the next state") {
    const auto m = random_known_model({3, 2, 2}, rng);
    const auto v = random_categorical("state", 3, rng);
    CHECK(si_aggregated_cost(1, 0, m, v, 1) == doctest::Approx(kl(column(m, 1, 0), v)).epsilon(1e-14));
  }
  SUBCASE("zero when the preference is the prediction") {
    const auto m = GenerativeModel::known(identity_A(2), Tensor::filled({{"next", 2}, {"state", 2}, {"action", 2}}, 0.5),
                                          Tensor::vector("state", {1, 0}));
    CHECK(std::abs(si_aggregated_cost(0, 1, m, Categorical::uniform("state", 2), 1)) < 1e-15);
  }
  SUBCASE("matches the hand-rolled recursion") {
    for (int trial = 0; trial < 30; ++trial) {
      const auto m = random_known_model({2, 2, 2}, rng);
      const auto v = random_categorical("state", 2, rng);
      for (std::size_t depth : {1u, 2u, 3u})
        for (std::size_t s = 0; s < 2; ++s)
          for (Action u = 0; u < 2; ++u)
            CHECK(std::abs(si_aggregated_cost(s, u, m, v, depth) - si_oracle(s, u, m, v, depth)) < 1e-12);
    }
  }
  SUBCASE("tied minima are averaged") {
    // Both actions are identical, so the ties split evenly and the cost
    // equals the single-action value.
    Tensor B = Tensor::zeros({{"next", 2}, {"state", 2}, {"action", 2}});
    for (Action u = 0; u < 2; ++u) {
      B.at({0, 0, u}) = 0.3;
      B.at({1, 0, u}) = 0.7;
      B.at({0, 1, u}) = 0.6;
      B.at({1, 1, u}) = 0.4;
    }
    const auto m = GenerativeModel::known(identity_A(2), B, Tensor::vector("state", {1, 0}));
    const auto v = Categorical(Tensor::vector("state", {0.2, 0.8}));
    CHECK(si_aggregated_cost(0, 0, m, v, 2) == doctest::Approx(si_oracle(0, 0, m, v, 2)).epsilon(1e-14));
    CHECK(si_aggregated_cost(0, 0, m, v, 2) == si_aggregated_cost(0, 1, m, v, 2));
  }
  CHECK_THROWS(si_aggregated_cost(0, 0, random_known_model({2, 2, 2}, rng), Categorical::uniform("state", 2), 0));
}

TEST_CASE("timing sweep without timing") {
  std::mt19937_64 rng(53);
  const auto m = random_known_model({3, 3, 2}, rng);
  const Target tgt{random_categorical("obs", 3, rng), random_categorical("state", 3, rng)};
  PlannerConfig cfg;
  cfg.max_expansions = 5;
  TimingOptions opt;
  opt.timed = false;
  const auto rows = timing_sweep(m, random_categorical("state", 3, rng), tgt, {1, 3}, cfg, opt, rng);
  REQUIRE(rows.size() == 4);
  std::size_t baseline_seen = 0;
  for (const auto& r : rows) {
    if (r.planner == "baseline") {
      CHECK(r.work == policy_count(2, r.horizon));
      ++baseline_seen;
    } else {
      CHECK(r.work == 5);
    }
    CHECK_FALSE(r.censored);
  }
  CHECK(baseline_seen == 2);
}
