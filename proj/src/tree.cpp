#include "cote/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cote {

TildeTree::NodePtr TildeTree::leaf(double value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  return n;
}

TildeTree::NodePtr TildeTree::inner(std::vector<Atom> test, NodePtr yes, NodePtr no) {
  auto n = std::make_shared<Node>();
  n->test = std::move(test);
  n->yes = std::move(yes);
  n->no = std::move(no);
  return n;
}

namespace {

TildeTree::NodePtr renumber(const TildeTree::NodePtr& node, std::size_t& next_leaf) {
  if (!node) throw std::invalid_argument("tree node is missing");
  auto copy = std::make_shared<TildeTree::Node>(*node);
  if (!node->yes && !node->no) {
    if (!node->test.empty()) throw std::invalid_argument("leaf carries a test");
    if (!std::isfinite(node->value)) throw std::invalid_argument("leaf value is not finite");
    copy->leaf_index = next_leaf++;
    return copy;
  }
  if (!node->yes || !node->no) throw std::invalid_argument("inner node needs both a yes and a no child");
  if (node->test.empty()) throw std::invalid_argument("inner node has an empty test");
  copy->yes = renumber(node->yes, next_leaf);
  copy->no = renumber(node->no, next_leaf);
  return copy;
}

std::size_t depth_of(const TildeTree::Node& n) {
  if (n.is_leaf()) return 0;
  return 1 + std::max(depth_of(*n.yes), depth_of(*n.no));
}

bool same(const TildeTree::Node& a, const TildeTree::Node& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.value == b.value && a.leaf_index == b.leaf_index;
  return a.test == b.test && same(*a.yes, *b.yes) && same(*a.no, *b.no);
}

}  // namespace

TildeTree::TildeTree(NodePtr root) { root_ = renumber(root, leaf_count_); }

std::size_t TildeTree::depth() const { return depth_of(*root_); }

bool operator==(const TildeTree& a, const TildeTree& b) { return same(*a.root_, *b.root_); }

}  // namespace cote
