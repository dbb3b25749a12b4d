#include "btai/tree.hpp"

#include <deque>
#include <ostream>
#include <stdexcept>

#include "btai/inference.hpp"

namespace btai {

MultiIndex MultiIndex::appended(Action a) const {
  auto next = actions_;
  next.push_back(a);
  return MultiIndex(std::move(next));
}

bool MultiIndex::is_strict_prefix_of(const MultiIndex& other) const {
  if (size() >= other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (actions_[i] != other.actions_[i]) return false;
  }
  return true;
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(actions_[i]);
  }
  return s + ")";
}

Categorical predict_state(const GenerativeModel& model, const Categorical& belief, Action u) {
  if (u >= model.spec().n_actions) throw std::out_of_range("action out of range");
  const Tensor next = inner_product(
      model.B_mean(), {belief.probs(), Tensor::one_hot(axis::action, model.spec().n_actions, u)});
  return Categorical(next.renamed(axis::next, axis::state));
}

Tree::Tree(Categorical present_belief) : root_(std::make_unique<TreeNode>()) {
  if (present_belief.axis_name() != axis::state) {
    throw std::invalid_argument("root belief must be over the state axis");
  }
  root_->state_belief = std::move(present_belief);
}

std::vector<TreeNode*> Tree::attach_children(TreeNode& node, const GenerativeModel& model) {
  if (!node.children.empty()) {
    throw std::logic_error("node " + node.index.to_string() + " is already expanded");
  }
  std::vector<TreeNode*> created;
  const std::size_t n_actions = model.spec().n_actions;
  for (Action u = 0; u < n_actions; ++u) {
    auto child = std::make_unique<TreeNode>();
    child->index = node.index.appended(u);
    child->parent = &node;
    child->serial = next_serial_++;
    child->state_belief = predict_state(model, node.state_belief, u);
    child->obs_belief = update_future_obs(model, *child);
    created.push_back(child.get());
    node.children.push_back(std::move(child));
  }
  return created;
}

std::vector<TreeNode*> Tree::breadth_first() {
  std::vector<TreeNode*> out;
  std::deque<TreeNode*> queue{root_.get()};
  while (!queue.empty()) {
    TreeNode* n = queue.front();
    queue.pop_front();
    for (auto& c : n->children) {
      out.push_back(c.get());
      queue.push_back(c.get());
    }
  }
  return out;
}

std::vector<const TreeNode*> Tree::breadth_first() const {
  auto nodes = const_cast<Tree*>(this)->breadth_first();
  return {nodes.begin(), nodes.end()};
}

void Tree::dump(std::ostream& out) const {
  auto visit = [&](auto&& self, const TreeNode& n) -> void {
    out << std::string(2 * n.depth(), ' ') << n.index.to_string() << " n=" << n.visits << " gbar=";
    if (n.visits > 0) {
      out << n.average_cost();
    } else {
      out << "NA";
    }
    out << " mode=" << n.state_belief.mode() << '\n';
    for (const auto& c : n.children) self(self, *c);
  };
  visit(visit, *root_);
}

std::vector<TreeNode*> ancestors(const TreeNode& node) {
  std::vector<TreeNode*> out;
  for (TreeNode* p = node.parent; p != nullptr; p = p->parent) out.push_back(p);
  return out;
}

}  // namespace btai
