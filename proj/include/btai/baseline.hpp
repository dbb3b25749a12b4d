#pragma once

#include <cstddef>
#include <vector>

#include "btai/model.hpp"
#include "btai/planner.hpp"

namespace btai {

/// Exhaustive active inference over fixed-length action sequences, with
/// exact belief propagation through the known matrices. Serves as the
/// reference the tree planner is checked against.

using Policy = std::vector<Action>;

std::size_t policy_count(std::size_t n_actions, std::size_t horizon);

/// All |U|^h policies in lexicographic order.
std::vector<Policy> enumerate_policies(std::size_t n_actions, std::size_t horizon);

struct Rollforward {
  std::vector<Categorical> states;  // one per step after the present
  std::vector<Categorical> obs;
};

/// State beliefs pushed through the mean transitions of each action in turn,
/// and the matching observation beliefs.
Rollforward rollforward_beliefs(const Policy& policy, const GenerativeModel& model,
                                const Categorical& present);

/// Risk plus ambiguity of one predicted step.
double step_cost(const GenerativeModel& model, const Categorical& state, const Categorical& obs,
                 const Categorical& preferred_obs);

/// Sum over the policy's steps of risk plus ambiguity.
double efe_policy(const Policy& policy, const GenerativeModel& model, const Categorical& present,
                  const Categorical& preferred_obs);

/// Cost of the last step of `prefix` (the step reached after all its actions).
double localized_cost(const Policy& prefix, const GenerativeModel& model, const Categorical& present,
                      const Categorical& preferred_obs);

/// Recursive sum of localized costs over the prefixes of `policy`.
double aggregated_cost(const Policy& policy, const GenerativeModel& model, const Categorical& present,
                       const Categorical& preferred_obs);

/// softmax(-gamma * efe).
std::vector<double> policy_posterior(const std::vector<double>& efe, double gamma = 1.0);

/// Action with the most posterior mass among policies starting with it;
/// ties go to the lowest action.
Action bma_select_action(const std::vector<Policy>& policies, const std::vector<double>& posterior,
                         std::size_t n_actions);

/// Expected aggregated cost of taking `action` in the known state `state`,
/// looking `depth` steps ahead. Each step costs the KL divergence of the
/// next-state distribution from the preferred states; later actions are
/// spread uniformly over those with minimal cost (within 1e-12).
double si_aggregated_cost(std::size_t state, Action action, const GenerativeModel& model,
                          const Categorical& preferred_states, std::size_t depth);

struct TimingRow {
  std::string planner;  // "baseline" or "btai"
  std::size_t horizon = 0;
  std::size_t work = 0;  // policies evaluated, or tree expansions
  double wall_time_ms = 0.0;
  bool censored = false;
};

struct TimingOptions {
  bool timed = true;           // when false, cells run once and report no time
  double timeout_ms = 60000;   // per cell; an exceeded cell is censored
  double min_time_ms = 50;     // repeat each cell until at least this much time passed
  int min_repeats = 3;
};

/// Times exhaustive evaluation (all policies, then action selection) and
/// tree planning with `btai` at each horizon. The tree planner does not
/// depend on the horizon; its cells are timed in interleaved rounds. Each
/// cell discards one warm-up run and reports the median of its repeated runs.
std::vector<TimingRow> timing_sweep(const GenerativeModel& model, const Categorical& present,
                                    const Target& target, const std::vector<std::size_t>& horizons,
                                    const PlannerConfig& btai, const TimingOptions& options, Rng& rng);

}  // namespace btai
