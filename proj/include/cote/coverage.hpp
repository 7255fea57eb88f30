#pragma once

// Existential conjunctive queries over ground background facts, and the
// per-group example coverage cache.

#include <boost/dynamic_bitset.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cote/logic.hpp"

namespace cote {

using CoverageSet = boost::dynamic_bitset<std::uint64_t>;

/// Ground background atoms with a per-argument index. Constants are interned.
class FactBase {
 public:
  struct Relation {
    std::size_t arity = 0;
    std::vector<int> tuples;  // row-major, arity ints per fact
    std::vector<std::unordered_map<int, std::vector<std::uint32_t>>> by_position;
    std::set<std::vector<int>> members;

    std::size_t size() const { return arity == 0 ? members.size() : tuples.size() / arity; }
    std::span<const int> row(std::size_t i) const { return {tuples.data() + i * arity, arity}; }
  };

  /// Adds a ground atom; duplicates are ignored. Throws std::invalid_argument
  /// for an atom with variables.
  void add(const Atom& fact);

  bool contains(const Atom& fact) const;
  std::size_t size() const { return size_; }

  std::optional<int> constant_id(const std::string& name) const;
  const std::string& constant_name(int id) const { return constants_[static_cast<std::size_t>(id)]; }
  /// Every constant seen in a fact, in first-seen order.
  const std::vector<std::string>& constants() const { return constants_; }

  const Relation* relation(const std::string& predicate, std::size_t arity) const;
  std::vector<Atom> facts() const;

 private:
  int intern(const std::string& name);

  std::unordered_map<std::string, int> constant_ids_;
  std::vector<std::string> constants_;
  std::map<std::pair<std::string, std::size_t>, Relation> relations_;
  std::vector<std::pair<std::string, std::size_t>> relation_order_;
  std::size_t size_ = 0;
};

struct Example {
  Atom atom;
  bool positive = true;

  bool operator==(const Example&) const = default;
};

/// Labeled ground target atoms; an example's id is its position.
struct ExampleSet {
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
};

/// Unknown predicates met while evaluating queries.
struct QueryWarnings {
  std::set<std::string> unknown_predicates;
};

/// A rule body compiled against one fact base; evaluates for many head
/// bindings. Unknown predicates make the query unsatisfiable.
class CompiledQuery {
 public:
  CompiledQuery(const FactBase& facts, const std::vector<std::string>& head_variables,
                std::span<const Atom> body, QueryWarnings* warnings = nullptr);

  /// `head_constants[i]` is the value of `head_variables[i]`; the strings
  /// need not be known to the fact base.
  bool satisfied(std::span<const std::string> head_constants) const;
  bool satisfied_ids(std::span<const int> head_ids) const;

 private:
  struct Arg {
    enum class Kind : std::uint8_t { Constant, Head, Local } kind = Kind::Constant;
    int value = -1;
  };
  struct Goal {
    const FactBase::Relation* relation = nullptr;
    std::vector<Arg> args;
  };

  bool search(std::vector<int>& locals, std::span<const int> head, std::vector<bool>& done,
              std::size_t remaining) const;

  const FactBase& facts_;
  std::vector<Goal> goals_;
  std::size_t local_count_ = 0;
  bool unsatisfiable_ = false;
};

/// Binding of head variable names to constant names.
using HeadBinding = std::map<std::string, std::string>;

/// Binds the target's head variables to the arguments of a ground instance.
/// Throws std::invalid_argument on predicate or arity mismatch.
HeadBinding bind_head(const Atom& target, const Atom& ground);

/// True iff some grounding of the remaining variables puts every body atom
/// (after applying `binding`) in `facts`. The empty body is always true.
bool satisfies(const FactBase& facts, const HeadBinding& binding, std::span<const Atom> body,
               QueryWarnings* warnings = nullptr);

/// Bit e set iff example e satisfies the group's atoms.
CoverageSet group_coverage(const FactBase& facts, const ExampleSet& examples, const Atom& target,
                           const PredicateGroup& group, QueryWarnings* warnings = nullptr);

/// Caches coverage per canonical group key and per body key. Each distinct
/// group is evaluated once.
class CoverageCache {
 public:
  CoverageCache(const FactBase& facts, const ExampleSet& examples, Atom target);

  const CoverageSet& group(const PredicateGroup& group);
  /// Intersection of the groups' coverage; the empty list covers everything.
  CoverageSet clause(std::span<const PredicateGroup> groups);
  CoverageSet clause(const Clause& clause);

  CoverageSet all() const;
  CoverageSet none() const { return CoverageSet(examples_.size()); }

  std::size_t group_evaluations() const { return group_evaluations_; }
  const QueryWarnings& warnings() const { return warnings_; }

 private:
  const FactBase& facts_;
  const ExampleSet& examples_;
  Atom target_;
  std::vector<std::vector<int>> head_ids_;  // per example, -1 for unknown constants
  std::unordered_map<std::string, CoverageSet> groups_;
  std::unordered_map<std::string, CoverageSet> clauses_;
  std::size_t group_evaluations_ = 0;
  QueryWarnings warnings_;
};

/// `clause_coverage` from cached group coverage.
CoverageSet clause_coverage(std::span<const PredicateGroup> groups, CoverageCache& cache);

}  // namespace cote
