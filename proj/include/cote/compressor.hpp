#pragma once

// Compression of a tree ensemble into one decision list.
//
// Each tree becomes a positive decision list (paths in yes-before-no order,
// negated branch tests dropped). Lists are merged one tree at a time as a
// lexicographic cross product, and every merge is compressed either by
// subsumption (logically equivalent output, `scote`) or by training-example
// coverage (equivalent on the training set, `ecote`).

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cote/coverage.hpp"
#include "cote/logic.hpp"
#include "cote/subsumption.hpp"
#include "cote/tree.hpp"

namespace cote {

/// One rule per leaf in yes-before-no order; a rule body is the conjunction
/// of the tests on the yes-edges of its path.
DecisionList tree_to_list(const TildeTree& tree, const Atom& target, std::size_t tree_index = 0,
                          CombineMode combine = CombineMode::Sum);

struct Prepared {
  Atom target;
  CombineMode combine = CombineMode::Sum;
  std::vector<DecisionList> lists;     // standardized apart by tree index
  std::vector<PredicateGroup> groups;  // distinct canonical keys, first-seen order
  std::size_t groups_before_dedup = 0;
};

/// Converts, reduces and standardizes every tree, and collects predicate
/// groups. Throws std::invalid_argument for an empty ensemble or a rule whose
/// head does not match the target.
Prepared prep(const Ensemble& ensemble, const SearchBudget& budget = {}, bool deduplicate = true);

/// Tag used to standardize the rules of tree `index` apart.
std::string tree_tag(std::size_t index);

/// Conjunction of two standardized-apart rules; values add. Throws
/// std::logic_error if the bodies share a non-head variable.
Clause add_clauses(const Clause& first, const Clause& second);

using MergePair = std::pair<std::size_t, std::size_t>;

/// Lexicographic (outer index over `first`) order of the cross product.
std::vector<MergePair> merge_order(const DecisionList& first, const DecisionList& second);

/// Unreduced cross product of two lists in the given order.
DecisionList merge_lists(const DecisionList& first, const DecisionList& second,
                         const std::vector<MergePair>& order);

/// Drops every predicate group implied by another retained group of the
/// same rule. On mutual subsumption the later group goes.
Clause reduce_clause(const Clause& clause, const SubsumptionMatrix& sm);

struct ListReductionOptions {
  bool exact_clause_subsumption = false;
  SearchBudget budget;
};

/// Removes rules subsumed by an earlier retained rule. A rule is subsumed
/// when each group of the earlier rule subsumes some group of it (or, with
/// `exact_clause_subsumption`, when whole-body subsumption succeeds). The
/// final empty-body rule is always kept.
std::vector<Clause> reduce_list(const std::vector<Clause>& rules, const SubsumptionMatrix& sm,
                                const ListReductionOptions& options = {});

/// Thrown when a compression job runs past its deadline.
class CompressionAborted : public std::runtime_error {
 public:
  CompressionAborted(std::string phase, std::size_t merges_completed, std::size_t rules_in_progress,
                     std::vector<std::size_t> rules_per_merge);

  const std::string& phase() const { return phase_; }
  std::size_t merges_completed() const { return merges_completed_; }
  std::size_t rules_in_progress() const { return rules_in_progress_; }
  const std::vector<std::size_t>& rules_per_merge() const { return rules_per_merge_; }

 private:
  std::string phase_;
  std::size_t merges_completed_;
  std::size_t rules_in_progress_;
  std::vector<std::size_t> rules_per_merge_;
};

struct ScoteOptions {
  SearchBudget budget;
  Deadline deadline = Deadline::never();
  bool exact_clause_subsumption = false;
};

struct ScoteResult {
  DecisionList list;
  SubsumptionMatrix sm;
  std::vector<std::size_t> rules_per_merge;
};

/// Subsumption-based compression. Throws CompressionAborted when
/// `options.deadline` expires.
ScoteResult scote(const Prepared& prepared, const ScoteOptions& options = {});

/// Examples covered by the rule that no earlier rule has claimed.
CoverageSet check_coverage(const Clause& clause, CoverageCache& cache, const CoverageSet& claimed);

/// Drops predicate groups whose removal leaves the rule's training coverage
/// unchanged, scanning in order until nothing more can go.
Clause prune_clause(const Clause& clause, CoverageCache& cache);

struct EcoteResult {
  DecisionList list;
  std::vector<std::size_t> rules_per_merge;
  std::size_t group_evaluations = 0;
  QueryWarnings warnings;
};

/// Example-based compression. Agrees with the ensemble on every training
/// example; apart from the final catch-all, every rule covers at least one
/// example no earlier rule covers.
EcoteResult ecote(const Prepared& prepared, const FactBase& facts, const ExampleSet& examples);

/// Evaluates a decision list against one fact base. Rule bodies are
/// evaluated group by group with per-instance memoization.
class ListPredictor {
 public:
  ListPredictor(const DecisionList& list, const FactBase& facts);

  double operator()(const Atom& instance) const;
  /// Index of the first satisfied rule.
  std::size_t firing_rule(const Atom& instance) const;

 private:
  const DecisionList& list_;
  const FactBase& facts_;
  std::vector<CompiledQuery> groups_;
  std::vector<std::vector<std::size_t>> rule_groups_;
};

/// Walks every tree with TILDE path semantics and combines leaf values.
class EnsembleEvaluator {
 public:
  EnsembleEvaluator(const Ensemble& ensemble, const FactBase& facts);

  double operator()(const Atom& instance) const;
  /// Leaf index reached in each tree.
  std::vector<std::size_t> leaves(const Atom& instance) const;

 private:
  struct CompiledNode {
    std::size_t query = 0;  // into queries_, tests the yes-path context plus this node
    std::size_t yes = 0;
    std::size_t no = 0;
    bool leaf = false;
    double value = 0.0;
    std::size_t leaf_index = 0;
  };

  std::size_t compile(const TildeTree::Node& node, std::vector<Atom>& context);
  std::vector<int> head_ids(const Atom& instance) const;

  const Ensemble& ensemble_;
  const FactBase& facts_;
  std::vector<CompiledQuery> queries_;
  std::vector<CompiledNode> nodes_;
  std::vector<std::size_t> roots_;
};

/// First satisfied rule's value, divided by the tree count in Average mode.
double predict(const DecisionList& list, const FactBase& facts, const Atom& instance);

/// Ground-truth ensemble value: sum of reached leaf values, or their mean.
double eval_ensemble(const Ensemble& ensemble, const FactBase& facts, const Atom& instance);

}  // namespace cote
