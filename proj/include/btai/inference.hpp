#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "btai/model.hpp"
#include "btai/tree.hpp"

namespace btai {

enum class InferenceMode { local, global };

/// How beliefs of future (tree) nodes are computed.
///  variational: coordinate ascent on the mean-field free energy.
///  predictive:  closed form, the parent's state belief pushed through the
///               mean transition, then through the mean likelihood. These
///               are the exact predictive marginals.
enum class FutureBeliefs { variational, predictive };

struct InferenceSettings {
  int max_sweeps = 16;
  double vfe_tolerance = 1e-6;
  InferenceMode mode = InferenceMode::local;
  FutureBeliefs future = FutureBeliefs::variational;

  void validate() const;
};

struct InferenceResult {
  double initial_vfe = 0.0;
  std::vector<double> vfe_trace;  // free energy after each sweep
  int sweeps = 0;
  bool converged = false;
};

/// Counts observed transitions into the Dirichlet posteriors. Returns the
/// model unchanged in known-matrix mode.
GenerativeModel update_dirichlet_posteriors(const GenerativeModel& model, const PastBeliefs& past);

Categorical update_future_obs(const GenerativeModel& model, const TreeNode& node);
/// Uses the parent's state belief and the node's children.
Categorical update_future_state(const GenerativeModel& model, const TreeNode& node);
Categorical update_past_action(const GenerativeModel& model, const PastBeliefs& past, std::size_t tau);
/// `present` is the tree root, whose children send messages into S_t.
Categorical update_past_state(const GenerativeModel& model, const PastBeliefs& past, std::size_t tau,
                              const TreeNode* present = nullptr);

/// Global mode sweeps the past chain (if given) and every tree node; local
/// mode sweeps only `new_nodes`. The tree root mirrors the present belief
/// of `past` whenever both are supplied.
InferenceResult run_inference(const GenerativeModel& model, PastBeliefs* past, Tree* tree,
                              const InferenceSettings& settings,
                              std::span<TreeNode* const> new_nodes = {});

/// E_Q[ln Q - ln P] over the past chain and every tree node, plus the
/// Dirichlet terms in learning mode. Either part may be absent.
double variational_free_energy(const GenerativeModel& model, const PastBeliefs* past,
                               const Tree* tree);

/// The terms of the free energy that involve any node in `nodes`.
double local_free_energy(const GenerativeModel& model, std::span<TreeNode* const> nodes);

/// Rows "sweep,vfe"; sweep 0 is the state before the first sweep.
void write_vfe_trace(std::ostream& out, const InferenceResult& result);

}  // namespace btai
