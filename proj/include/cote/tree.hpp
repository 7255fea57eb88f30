#pragma once

// Binary first-order regression trees and ensembles of them.

#include <memory>
#include <vector>

#include "cote/logic.hpp"

namespace cote {

/// A binary logical tree. An inner node tests a conjunction of atoms in the
/// context of the atoms on the yes-edges above it; leaves hold real values.
class TildeTree {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  struct Node {
    std::vector<Atom> test;  // empty for leaves
    NodePtr yes;
    NodePtr no;
    double value = 0.0;
    std::size_t leaf_index = 0;

    bool is_leaf() const { return !yes; }
  };

  static NodePtr leaf(double value);
  static NodePtr inner(std::vector<Atom> test, NodePtr yes, NodePtr no);

  /// Numbers leaves in yes-before-no order. Throws std::invalid_argument for a
  /// malformed tree (missing child, empty test, non-finite leaf value).
  explicit TildeTree(NodePtr root);

  const Node& root() const { return *root_; }
  std::size_t leaf_count() const { return leaf_count_; }
  /// Largest number of inner nodes on a root-to-leaf path.
  std::size_t depth() const;

  friend bool operator==(const TildeTree& a, const TildeTree& b);

 private:
  NodePtr root_;
  std::size_t leaf_count_ = 0;
};

/// Trees over one target whose leaf values combine by sum (boosting) or
/// average (bagging).
struct Ensemble {
  Atom target;
  CombineMode combine = CombineMode::Sum;
  std::vector<TildeTree> trees;
};

}  // namespace cote
