#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "btai/distributions.hpp"
#include "btai/model.hpp"

namespace btai {

/// Sequence of actions leading from the present to a future node. The empty
/// index is the root (present state).
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<Action> actions) : actions_(std::move(actions)) {}

  const std::vector<Action>& actions() const { return actions_; }
  std::size_t size() const { return actions_.size(); }
  bool empty() const { return actions_.empty(); }
  Action last() const { return actions_.back(); }

  MultiIndex appended(Action a) const;
  /// True for a proper prefix (strictly shorter).
  bool is_strict_prefix_of(const MultiIndex& other) const;
  /// "()" for the root, otherwise "(a,b,c)".
  std::string to_string() const;

  bool operator==(const MultiIndex&) const = default;

 private:
  std::vector<Action> actions_;
};

struct TreeNode {
  MultiIndex index;
  TreeNode* parent = nullptr;
  Categorical state_belief;
  Categorical obs_belief;  // unused at the root
  long visits = 0;
  double aggregated_cost = 0.0;
  double local_cost = 0.0;
  std::size_t serial = 0;  // creation order, root = 0
  // Empty for a leaf, otherwise one child per action in action order.
  std::vector<std::unique_ptr<TreeNode>> children;

  bool is_leaf() const { return children.empty(); }
  std::size_t depth() const { return index.size(); }
  Action action() const { return index.last(); }
  double average_cost() const { return aggregated_cost / double(visits); }
};

class Tree {
 public:
  explicit Tree(Categorical present_belief);
  Tree(Tree&&) = default;
  Tree& operator=(Tree&&) = default;

  TreeNode& root() { return *root_; }
  const TreeNode& root() const { return *root_; }

  /// Number of nodes including the root.
  std::size_t node_count() const { return next_serial_; }

  /// Adds one child per action. Each child's state belief starts at the
  /// prediction through the mean transition for its action and its
  /// observation belief at the matching update. Throws if the node already has children.
  std::vector<TreeNode*> attach_children(TreeNode& node, const GenerativeModel& model);

  /// All nodes except the root, parents before children, siblings in action
  /// order.
  std::vector<TreeNode*> breadth_first();
  std::vector<const TreeNode*> breadth_first() const;

  /// One line per node, indented two spaces per level:
  ///   <index> n=<visits> gbar=<average cost> mode=<argmax of state belief>
  void dump(std::ostream& out) const;

 private:
  std::unique_ptr<TreeNode> root_;
  std::size_t next_serial_ = 1;
};

/// Path from the parent up to the root, nearest first.
std::vector<TreeNode*> ancestors(const TreeNode& node);

/// Mean transition matrix for `u` applied to `belief`.
Categorical predict_state(const GenerativeModel& model, const Categorical& belief, Action u);

}  // namespace btai
