#include "btai/baseline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace btai {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Plain-loop kernels over the model's row-major tensors.
struct Kernels {
  std::size_t S, O, U;
  std::span<const double> A;  // (obs, state)
  std::span<const double> B;  // (next, state, action)
  std::vector<double> ambiguity;  // H[A(.|s)] per state

  explicit Kernels(const GenerativeModel& m)
      : S(m.spec().n_states), O(m.spec().n_obs), U(m.spec().n_actions),
        A(m.A_mean().values()), B(m.B_mean().values()), ambiguity(S, 0.0) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t o = 0; o < O; ++o) {
        const double p = A[o * S + s];
        if (p > 0.0) ambiguity[s] -= p * std::log(p);
      }
    }
  }

  void transition(const std::vector<double>& q, Action u, std::vector<double>& out) const {
    for (std::size_t n = 0; n < S; ++n) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += B[(n * S + s) * U + u] * q[s];
      out[n] = acc;
    }
  }

  void observe(const std::vector<double>& q, std::vector<double>& out) const {
    for (std::size_t o = 0; o < O; ++o) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += A[o * S + s] * q[s];
      out[o] = acc;
    }
  }

  double cost(const std::vector<double>& qs, const std::vector<double>& qo, const Categorical& c) const {
    double risk = 0.0;
    for (std::size_t o = 0; o < O; ++o) {
      if (qo[o] == 0.0) continue;
      if (c[o] == 0.0) return kInfiniteCost;
      risk += qo[o] * std::log(qo[o] / c[o]);
    }
    double amb = 0.0;
    for (std::size_t s = 0; s < S; ++s) amb += qs[s] * ambiguity[s];
    const double g = risk + amb;
    return std::isfinite(g) ? g : kInfiniteCost;
  }

  // Full expected free energy of one policy, rolling beliefs in place.
  double efe(const Policy& policy, const Categorical& present, const Categorical& c,
             std::vector<double>& qs, std::vector<double>& next, std::vector<double>& qo) const {
    qs.assign(present.probs().values().begin(), present.probs().values().end());
    double total = 0.0;
    for (Action u : policy) {
      transition(qs, u, next);
      std::swap(qs, next);
      observe(qs, qo);
      total += cost(qs, qo, c);
    }
    return total;
  }
};

void check_known(const GenerativeModel& model) {
  if (model.learning()) throw std::invalid_argument("the exhaustive planner needs known matrices");
}

void check_policy(const Policy& policy, std::size_t n_actions) {
  for (Action u : policy) {
    if (u >= n_actions) throw std::out_of_range("policy action out of range");
  }
}

}  // namespace

std::size_t policy_count(std::size_t n_actions, std::size_t horizon) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < horizon; ++i) n *= n_actions;
  return n;
}

std::vector<Policy> enumerate_policies(std::size_t n_actions, std::size_t horizon) {
  if (n_actions == 0) throw std::invalid_argument("need at least one action");
  std::vector<Policy> out;
  out.reserve(policy_count(n_actions, horizon));
  Policy p(horizon, 0);
  while (true) {
    out.push_back(p);
    std::size_t k = horizon;
    while (k > 0 && ++p[k - 1] == n_actions) p[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

Rollforward rollforward_beliefs(const Policy& policy, const GenerativeModel& model,
                                const Categorical& present) {
  check_policy(policy, model.spec().n_actions);
  const Kernels k(model);
  std::vector<double> qs(present.probs().values().begin(), present.probs().values().end());
  std::vector<double> next(k.S), qo(k.O);
  Rollforward out;
  for (Action u : policy) {
    k.transition(qs, u, next);
    std::swap(qs, next);
    k.observe(qs, qo);
    out.states.emplace_back(Tensor::vector(axis::state, qs));
    out.obs.emplace_back(Tensor::vector(axis::obs, qo));
  }
  return out;
}

double step_cost(const GenerativeModel& model, const Categorical& state, const Categorical& obs,
                 const Categorical& preferred_obs) {
  const Kernels k(model);
  const auto qs = state.probs().values();
  const auto qo = obs.probs().values();
  return k.cost({qs.begin(), qs.end()}, {qo.begin(), qo.end()}, preferred_obs);
}

double efe_policy(const Policy& policy, const GenerativeModel& model, const Categorical& present,
                  const Categorical& preferred_obs) {
  check_known(model);
  check_policy(policy, model.spec().n_actions);
  const Kernels k(model);
  std::vector<double> qs, next(k.S), qo(k.O);
  return k.efe(policy, present, preferred_obs, qs, next, qo);
}

double localized_cost(const Policy& prefix, const GenerativeModel& model, const Categorical& present,
                      const Categorical& preferred_obs) {
  check_known(model);
  if (prefix.empty()) throw std::invalid_argument("localized cost needs a non-empty prefix");
  const Rollforward r = rollforward_beliefs(prefix, model, present);
  return step_cost(model, r.states.back(), r.obs.back(), preferred_obs);
}

double aggregated_cost(const Policy& policy, const GenerativeModel& model, const Categorical& present,
                       const Categorical& preferred_obs) {
  if (policy.empty()) return 0.0;
  const Policy shorter(policy.begin(), policy.end() - 1);
  return aggregated_cost(shorter, model, present, preferred_obs) +
         localized_cost(policy, model, present, preferred_obs);
}

std::vector<double> policy_posterior(const std::vector<double>& efe, double gamma) {
  if (efe.empty()) throw std::invalid_argument("no policies");
  std::vector<double> logits(efe.size());
  for (std::size_t i = 0; i < efe.size(); ++i) logits[i] = -gamma * efe[i];
  const Categorical p = softmax(Tensor::vector("policy", std::move(logits)));
  return {p.probs().values().begin(), p.probs().values().end()};
}

Action bma_select_action(const std::vector<Policy>& policies, const std::vector<double>& posterior,
                         std::size_t n_actions) {
  if (policies.empty()) throw std::invalid_argument("no policies");
  if (posterior.size() != policies.size()) throw std::invalid_argument("posterior size mismatch");
  std::vector<double> mass(n_actions, 0.0);
  for (std::size_t m = 0; m < policies.size(); ++m) {
    if (policies[m].empty()) throw std::invalid_argument("empty policy");
    mass.at(policies[m].front()) += posterior[m];
  }
  return static_cast<Action>(std::max_element(mass.begin(), mass.end()) - mass.begin());
}

double si_aggregated_cost(std::size_t state, Action action, const GenerativeModel& model,
                          const Categorical& preferred_states, std::size_t depth) {
  check_known(model);
  const Kernels k(model);
  if (state >= k.S || action >= k.U) throw std::out_of_range("state or action out of range");
  if (depth == 0) throw std::invalid_argument("depth must be >= 1");

  std::vector<double> onehot(k.S, 0.0), next(k.S);
  onehot[state] = 1.0;
  k.transition(onehot, action, next);
  double g = kl_divergence(Categorical(Tensor::vector(axis::state, next)), preferred_states);
  if (!std::isfinite(g)) g = kInfiniteCost;
  if (depth == 1) return g;

  double future = 0.0;
  for (std::size_t s = 0; s < k.S; ++s) {
    if (next[s] == 0.0) continue;
    std::vector<double> costs(k.U);
    for (Action u = 0; u < k.U; ++u) costs[u] = si_aggregated_cost(s, u, model, preferred_states, depth - 1);
    const double best = *std::min_element(costs.begin(), costs.end());
    double sum = 0.0;
    int ties = 0;
    for (double c : costs) {
      if (c - best <= 1e-12) {
        sum += c;
        ++ties;
      }
    }
    future += next[s] * sum / ties;
  }
  return g + future;
}

std::vector<TimingRow> timing_sweep(const GenerativeModel& model, const Categorical& present,
                                    const Target& target, const std::vector<std::size_t>& horizons,
                                    const PlannerConfig& btai, const TimingOptions& options, Rng& rng) {
  check_known(model);
  const Kernels k(model);
  std::vector<TimingRow> rows;

  // Runs `cell` repeatedly and records the median time per run, which
  // shrugs off runs slowed by other processes. `cell` gets the remaining
  // budget and returns false when it gave up, which censors the row.
  auto measure = [&](auto&& cell, TimingRow& row) {
    if (!options.timed) {
      cell(std::numeric_limits<double>::infinity());
      return;
    }
    // One untimed run first, so a cell does not pay for the previous cell's cache state.
    if (!cell(options.timeout_ms)) {
      row.censored = true;
      row.wall_time_ms = options.timeout_ms;
      return;
    }
    const auto start = Clock::now();
    std::vector<double> runs;
    while (int(runs.size()) < options.min_repeats || elapsed_ms(start) < options.min_time_ms) {
      const double remaining = options.timeout_ms - elapsed_ms(start);
      const auto run_start = Clock::now();
      if (!cell(remaining)) {
        row.censored = true;
        row.wall_time_ms = options.timeout_ms;
        return;
      }
      runs.push_back(elapsed_ms(run_start));
      if (elapsed_ms(start) > options.timeout_ms) break;
    }
    const auto mid = runs.begin() + long(runs.size() / 2);
    std::nth_element(runs.begin(), mid, runs.end());
    row.wall_time_ms = *mid;
  };

  for (std::size_t h : horizons) {
    TimingRow base{"baseline", h, policy_count(k.U, h), 0.0, false};
    measure(
        [&](double budget_ms) {
          const auto start = Clock::now();
          std::vector<double> efe;
          efe.reserve(base.work);
          std::vector<double> qs, next(k.S), qo(k.O);
          Policy p(h, 0);
          std::vector<Policy> policies;
          policies.reserve(base.work);
          for (std::size_t m = 0; m < base.work; ++m) {
            efe.push_back(k.efe(p, present, target.obs, qs, next, qo));
            policies.push_back(p);
            for (std::size_t j = h; j > 0 && ++p[j - 1] == k.U;) p[--j] = 0;
            if ((m & 1023) == 1023 && elapsed_ms(start) > budget_ms) return false;
          }
          (void)bma_select_action(policies, policy_posterior(efe), k.U);
          return true;
        },
        base);
    rows.push_back(base);
    rows.push_back(TimingRow{"btai", h, std::size_t(btai.max_expansions), 0.0, false});
  }

  // The tree cells are timed in rounds, one run per horizon each round, so
  // slow and fast phases of the machine fall on every horizon alike.
  auto tree_run = [&] {
    const auto start = Clock::now();
    Tree t = plan(present, model, target, btai, rng);
    (void)select_action(t.root(), btai, rng);
    return elapsed_ms(start);
  };
  std::vector<TimingRow*> trees;
  for (TimingRow& r : rows)
    if (r.planner == "btai") trees.push_back(&r);
  if (trees.empty()) return rows;
  if (!options.timed) {
    for (std::size_t i = 0; i < trees.size(); ++i) tree_run();
    return rows;
  }
  tree_run();  // warm-up
  std::vector<std::vector<double>> runs(trees.size());
  const auto start = Clock::now();
  const double budget = options.min_time_ms * double(trees.size());
  while (int(runs.front().size()) < options.min_repeats || elapsed_ms(start) < budget) {
    for (auto& r : runs) r.push_back(tree_run());
    if (elapsed_ms(start) > options.timeout_ms * double(trees.size())) {
      for (TimingRow* t : trees) t->censored = true;
      break;
    }
  }
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto mid = runs[i].begin() + long(runs[i].size() / 2);
    std::nth_element(runs[i].begin(), mid, runs[i].end());
    trees[i]->wall_time_ms = trees[i]->censored ? options.timeout_ms : *mid;
  }
  return rows;
}

}  // namespace btai
