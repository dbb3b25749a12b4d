#include "btai/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace btai {

namespace {

Tensor action_vector(const GenerativeModel& m, Action u) {
  return Tensor::one_hot(axis::action, m.spec().n_actions, u);
}

Tensor as_next(const Categorical& c) { return c.probs().renamed(axis::state, axis::next); }

// ln B contracted with the previous state and action: a message over the
// next state, returned on the state axis.
Tensor forward_message(const GenerativeModel& m, const Tensor& prev_state, const Tensor& action) {
  return inner_product(m.B_log(), {prev_state, action}).renamed(axis::next, axis::state);
}

// ln B contracted with the next state and action: a message over the
// previous state.
Tensor backward_message(const GenerativeModel& m, const Tensor& next_state, const Tensor& action) {
  return inner_product(m.B_log(), {next_state, action});
}

void accumulate(Tensor& into, const Tensor& msg) { into = add(into, msg); }

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] != 0.0) s += a[i] * b[i];
  }
  return s;
}

double neg_entropy(const Categorical& c) { return -entropy(c); }

// E_Q[ln B(s'|s,u)] with Q = q_next x q_prev x q_action.
double transition_energy(const GenerativeModel& m, const Tensor& q_next, const Tensor& q_prev,
                         const Tensor& q_action) {
  return dot(inner_product(m.B_log(), {q_prev, q_action}), q_next);
}

// Free energy terms owned by a future node: its own entropies, the
// likelihood between its latent observation and state, and the transition
// from its parent.
double node_terms(const GenerativeModel& m, const TreeNode& n) {
  double f = neg_entropy(n.state_belief) + neg_entropy(n.obs_belief);
  f -= dot(inner_product(m.A_log(), {n.state_belief.probs()}), n.obs_belief.probs());
  f -= transition_energy(m, as_next(n.state_belief), n.parent->state_belief.probs(),
                         action_vector(m, n.action()));
  return f;
}

Categorical predictive_obs(const GenerativeModel& m, const Categorical& state) {
  return Categorical(inner_product(m.A_mean(), {state.probs()}));
}

void set_predictive(const GenerativeModel& m, TreeNode& n) {
  n.state_belief = predict_state(m, n.parent->state_belief, n.action());
  n.obs_belief = predictive_obs(m, n.state_belief);
}

}  // namespace

void InferenceSettings::validate() const {
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  if (!(vfe_tolerance > 0.0)) throw std::invalid_argument("vfe_tolerance must be > 0");
}

GenerativeModel update_dirichlet_posteriors(const GenerativeModel& model, const PastBeliefs& past) {
  if (!model.learning()) return model;
  const ModelSpec& s = model.spec();
  past.validate(s);

  Tensor d_hat = add(model.d_prior().concentrations(), past.states.front().probs());

  Tensor a_hat = model.a_prior().concentrations();
  for (std::size_t tau = 0; tau < past.states.size(); ++tau) {
    accumulate(a_hat, outer_product({past.observation_vector(tau, s.n_obs), past.states[tau].probs()}));
  }

  Tensor b_hat = model.b_prior().concentrations();
  for (std::size_t tau = 1; tau < past.states.size(); ++tau) {
    accumulate(b_hat, outer_product({as_next(past.states[tau]), past.states[tau - 1].probs(),
                                     past.actions[tau - 1].probs()}));
  }

  GenerativeModel out = model;
  out.ensure_theta(past.actions.size());
  std::vector<Dirichlet> theta_hat;
  for (std::size_t tau = 0; tau < past.actions.size(); ++tau) {
    theta_hat.emplace_back(add(out.theta_priors()[tau].concentrations(), past.actions[tau].probs()),
                           std::string(axis::action));
  }
  out.set_posteriors(Dirichlet(std::move(a_hat), std::string(axis::obs)),
                     Dirichlet(std::move(b_hat), std::string(axis::next)),
                     Dirichlet(std::move(d_hat), std::string(axis::state)), std::move(theta_hat));
  return out;
}

Categorical update_future_obs(const GenerativeModel& model, const TreeNode& node) {
  return softmax(inner_product(model.A_log(), {node.state_belief.probs()}));
}

Categorical update_future_state(const GenerativeModel& model, const TreeNode& node) {
  if (node.parent == nullptr) throw std::invalid_argument("the root has no future-state update");
  Tensor logits = inner_product(model.A_log(), {node.obs_belief.probs()});
  accumulate(logits, forward_message(model, node.parent->state_belief.probs(),
                                     action_vector(model, node.action())));
  for (const auto& child : node.children) {
    accumulate(logits, backward_message(model, as_next(child->state_belief),
                                        action_vector(model, child->action())));
  }
  return softmax(logits);
}

Categorical update_past_action(const GenerativeModel& model, const PastBeliefs& past, std::size_t tau) {
  if (tau + 1 >= past.states.size()) throw std::out_of_range("past action index out of range");
  Tensor logits = model.theta_log(tau);
  accumulate(logits, inner_product(model.B_log(), {past.states[tau].probs(), as_next(past.states[tau + 1])}));
  return softmax(logits);
}

Categorical update_past_state(const GenerativeModel& model, const PastBeliefs& past, std::size_t tau,
                              const TreeNode* present) {
  const std::size_t t = past.present();
  if (tau > t) throw std::out_of_range("past state index out of range");
  Tensor logits = inner_product(model.A_log(), {past.observation_vector(tau, model.spec().n_obs)});
  if (tau == 0) {
    accumulate(logits, model.D_log());
  } else {
    accumulate(logits, forward_message(model, past.states[tau - 1].probs(), past.actions[tau - 1].probs()));
  }
  if (tau < t) {
    accumulate(logits, backward_message(model, as_next(past.states[tau + 1]), past.actions[tau].probs()));
  } else if (present != nullptr) {
    for (const auto& child : present->children) {
      accumulate(logits, backward_message(model, as_next(child->state_belief),
                                          action_vector(model, child->action())));
    }
  }
  return softmax(logits);
}

double variational_free_energy(const GenerativeModel& model, const PastBeliefs* past, const Tree* tree) {
  double f = 0.0;
  if (past != nullptr) {
    const ModelSpec& s = model.spec();
    past->validate(s);
    const std::size_t t = past->present();
    for (std::size_t tau = 0; tau <= t; ++tau) {
      const Tensor& q = past->states[tau].probs();
      f += neg_entropy(past->states[tau]);
      f -= dot(inner_product(model.A_log(), {past->observation_vector(tau, s.n_obs)}), q);
      if (tau == 0) {
        f -= dot(model.D_log(), q);
      } else {
        f -= transition_energy(model, as_next(past->states[tau]), past->states[tau - 1].probs(),
                               past->actions[tau - 1].probs());
      }
    }
    for (std::size_t tau = 0; tau < t; ++tau) {
      f += neg_entropy(past->actions[tau]);
      f -= dot(model.theta_log(tau), past->actions[tau].probs());
    }
  }
  if (tree != nullptr) {
    for (const TreeNode* n : tree->breadth_first()) f += node_terms(model, *n);
  }
  if (model.learning()) {
    f += dirichlet_kl(model.a_posterior(), model.a_prior());
    f += dirichlet_kl(model.b_posterior(), model.b_prior());
    f += dirichlet_kl(model.d_posterior(), model.d_prior());
    for (std::size_t i = 0; i < model.theta_posteriors().size(); ++i) {
      f += dirichlet_kl(model.theta_posteriors()[i], model.theta_priors()[i]);
    }
  }
  return f;
}

double local_free_energy(const GenerativeModel& model, std::span<TreeNode* const> nodes) {
  auto in_set = [&](const TreeNode* n) { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); };
  double f = 0.0;
  for (const TreeNode* n : nodes) {
    f += node_terms(model, *n);
    // Edges to children outside the set still involve this node's belief.
    for (const auto& c : n->children) {
      if (in_set(c.get())) continue;
      f -= transition_energy(model, as_next(c->state_belief), n->state_belief.probs(),
                             action_vector(model, c->action()));
    }
  }
  return f;
}

InferenceResult run_inference(const GenerativeModel& model, PastBeliefs* past, Tree* tree,
                              const InferenceSettings& settings, std::span<TreeNode* const> new_nodes) {
  settings.validate();
  const bool global = settings.mode == InferenceMode::global;
  if (past != nullptr) past->validate(model.spec());
  if (past != nullptr && tree != nullptr) tree->root().state_belief = past->states.back();

  std::vector<TreeNode*> future;
  if (global) {
    if (tree != nullptr) future = tree->breadth_first();
  } else {
    future.assign(new_nodes.begin(), new_nodes.end());
  }
  const bool sweep_past = global && past != nullptr;

  auto energy = [&] {
    return global ? variational_free_energy(model, past, tree) : local_free_energy(model, future);
  };

  InferenceResult result;
  result.initial_vfe = energy();
  if (!sweep_past && future.empty()) {
    result.converged = true;
    return result;
  }

  double previous = result.initial_vfe;
  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    if (sweep_past) {
      const std::size_t t = past->present();
      for (std::size_t tau = 0; tau <= t; ++tau) {
        past->states[tau] = update_past_state(model, *past, tau, tree ? &tree->root() : nullptr);
      }
      if (tree != nullptr) tree->root().state_belief = past->states.back();
      for (std::size_t tau = 0; tau < t; ++tau) past->actions[tau] = update_past_action(model, *past, tau);
    }
    if (settings.future == FutureBeliefs::predictive) {
      for (TreeNode* n : future) set_predictive(model, *n);
    } else {
      for (TreeNode* n : future) n->state_belief = update_future_state(model, *n);
      for (TreeNode* n : future) n->obs_belief = update_future_obs(model, *n);
    }

    const double f = energy();
    result.vfe_trace.push_back(f);
    result.sweeps = sweep + 1;
    // Closed-form future beliefs need no iteration once nothing else moves.
    if (std::abs(f - previous) < settings.vfe_tolerance ||
        (!sweep_past && settings.future == FutureBeliefs::predictive)) {
      result.converged = true;
      break;
    }
    previous = f;
  }
  return result;
}

void write_vfe_trace(std::ostream& out, const InferenceResult& result) {
  const auto old_precision = out.precision(17);
  out << "sweep,vfe\n0," << result.initial_vfe << '\n';
  for (std::size_t i = 0; i < result.vfe_trace.size(); ++i) {
    out << i + 1 << ',' << result.vfe_trace[i] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace btai
