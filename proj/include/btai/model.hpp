#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "btai/distributions.hpp"
#include "btai/tensor.hpp"

namespace btai {

using Action = std::size_t;

/// Stand-in for ln 0 in known-matrix mode. Finite so that softmax stays
/// defined, large enough that such entries receive no posterior mass.
inline constexpr double kLogZero = -1e9;

struct ModelSpec {
  std::size_t n_states = 1;
  std::size_t n_obs = 1;
  std::size_t n_actions = 1;

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Scalar concentrations used to fill uniform Dirichlet priors.
struct PriorConcentrations {
  double a = 1.0;
  double b = 1.0;
  double d = 1.0;
  double theta = 1.0;
};

/// The agent's generative model: likelihood A (obs x state), transitions
/// B (next x state x action), initial state D, and the per-step action
/// priors. Holds Dirichlet priors and posteriors in learning mode, or exact
/// matrices in known-matrix mode, plus the derived means and expected logs
/// that the belief updates consume.
class GenerativeModel {
 public:
  /// Dirichlet priors from explicit concentration tensors. Posteriors start
  /// equal to the priors.
  static GenerativeModel with_priors(ModelSpec spec, Tensor a, Tensor b, Tensor d,
                                     double theta_concentration = 1.0);
  static GenerativeModel with_priors(ModelSpec spec, PriorConcentrations conc = {});

  /// Exact, fixed matrices; learning is disabled. Throws on non-stochastic
  /// input.
  static GenerativeModel known(Tensor A, Tensor B, Tensor D, double theta_concentration = 1.0);

  const ModelSpec& spec() const { return spec_; }
  bool learning() const { return learning_; }

  const Tensor& A_mean() const { return A_mean_; }
  const Tensor& A_log() const { return A_log_; }
  const Tensor& B_mean() const { return B_mean_; }
  const Tensor& B_log() const { return B_log_; }
  const Tensor& D_mean() const { return D_mean_; }
  const Tensor& D_log() const { return D_log_; }

  /// Expected log of the action prior at step `tau`; steps beyond the stored ones use the
  /// default prior.
  Tensor theta_log(std::size_t tau) const;

  // Dirichlet parameters; only meaningful in learning mode.
  const Dirichlet& a_prior() const { return a_; }
  const Dirichlet& b_prior() const { return b_; }
  const Dirichlet& d_prior() const { return d_; }
  const Dirichlet& a_posterior() const { return a_hat_; }
  const Dirichlet& b_posterior() const { return b_hat_; }
  const Dirichlet& d_posterior() const { return d_hat_; }
  const std::vector<Dirichlet>& theta_priors() const { return theta_; }
  const std::vector<Dirichlet>& theta_posteriors() const { return theta_hat_; }
  Dirichlet default_theta_prior() const;

  /// Replaces the posteriors and refreshes the derived tensors.
  void set_posteriors(Dirichlet a_hat, Dirichlet b_hat, Dirichlet d_hat,
                      std::vector<Dirichlet> theta_hat);

  /// Makes sure action priors and posteriors exist for the first `count` steps.
  void ensure_theta(std::size_t count);

  /// Posteriors become the priors of the next trial.
  void carry_posteriors_to_priors();

 private:
  GenerativeModel() = default;
  void refresh();

  ModelSpec spec_;
  bool learning_ = true;
  double theta_concentration_ = 1.0;

  Dirichlet a_, b_, d_;
  Dirichlet a_hat_, b_hat_, d_hat_;
  std::vector<Dirichlet> theta_, theta_hat_;

  Tensor A_mean_, A_log_, B_mean_, B_log_, D_mean_, D_log_;
};

/// Target (preferred) distributions over future observations and states.
struct Target {
  Categorical obs;
  Categorical state;

  static Target uniform(const ModelSpec& spec);
  /// One-hot at the given observation and state.
  static Target goal(const ModelSpec& spec, std::size_t goal_obs, std::size_t goal_state);
};

/// Posterior beliefs over the past and present: one state belief per step,
/// one action belief per transition, and the observations.
struct PastBeliefs {
  std::vector<Categorical> states;
  std::vector<Categorical> actions;
  std::vector<std::size_t> observations;

  /// t = 0 with a uniform state belief.
  static PastBeliefs start(const ModelSpec& spec, std::size_t first_obs);
  /// Appends U_t and S_{t+1} with uniform beliefs and the new observation.
  void extend(const ModelSpec& spec, std::size_t obs);

  std::size_t present() const { return states.size() - 1; }
  Tensor observation_vector(std::size_t tau, std::size_t n_obs) const;
  void validate(const ModelSpec& spec) const;
};

/// Serialises the model as plain text. Numbers are written in shortest
/// round-trip form, so load(save(m)) reproduces m exactly.
void save_model(std::ostream& out, const GenerativeModel& model);
GenerativeModel load_model(std::istream& in);

/// True when every slice along `axis_name` is non-negative and sums to one.
bool is_stochastic(const Tensor& t, std::string_view axis_name, double tol = 1e-10);

}  // namespace btai
