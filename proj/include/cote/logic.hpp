#pragma once

// First-order syntax: terms, atoms, weighted Horn rules and decision lists.
//
// Terms are flat (variables and constants only). Head variables of the target
// predicate are shared by every rule of every tree; only body-local variables
// are ever renamed.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cote {

struct Term {
  enum class Kind : std::uint8_t { Variable, Constant };

  Kind kind = Kind::Constant;
  std::string name;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name)}; }
  static Term constant(std::string name) { return {Kind::Constant, std::move(name)}; }

  bool is_variable() const { return kind == Kind::Variable; }
  bool is_constant() const { return kind == Kind::Constant; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

/// Identifies the leaf of one input tree a rule was built from.
struct LeafRef {
  std::size_t tree = 0;
  std::size_t leaf = 0;

  auto operator<=>(const LeafRef&) const = default;
  bool operator==(const LeafRef&) const = default;
};

using VariableSet = std::set<std::string>;
using Substitution = std::map<std::string, Term>;

/// A weighted Horn rule `value: head :- body`. The body is positive only.
struct Clause {
  Atom head;
  std::vector<Atom> body;
  double value = 0.0;
  std::vector<LeafRef> provenance;

  VariableSet head_variables() const;

  bool operator==(const Clause&) const = default;
};

enum class CombineMode : std::uint8_t { Sum, Average };

std::string_view to_string(CombineMode mode);

/// A connected fragment of a rule body. Two atoms are connected when they
/// share a variable that is not a head variable.
struct PredicateGroup {
  std::vector<Atom> atoms;
  std::vector<LeafRef> owner;
  std::string key;
};

/// Ordered weighted rules over one target; the first satisfied rule fires.
/// Rule values hold running sums; in Average mode predictions divide by
/// `tree_count`.
struct DecisionList {
  Atom target;
  std::vector<Clause> rules;
  CombineMode combine = CombineMode::Sum;
  std::size_t tree_count = 1;
  std::string method;

  bool operator==(const DecisionList&) const = default;
};

VariableSet variables_of(std::span<const Atom> atoms);
VariableSet variables_of(const Atom& atom);

/// Checks that `head` has pairwise-distinct variable arguments; throws
/// std::invalid_argument otherwise.
void validate_head(const Atom& head);

/// Renames every non-head variable `v` to `v_<tag>`. Head variables are
/// untouched.
Clause standardize_apart(const Clause& clause, std::string_view tag);

/// Simultaneous substitution; variables outside the domain are unchanged.
std::vector<Atom> apply_substitution(std::span<const Atom> atoms, const Substitution& theta);
Atom apply_substitution(const Atom& atom, const Substitution& theta);

/// Per body atom, the ordinal of its connected component; components are
/// numbered by first occurrence.
std::vector<std::size_t> group_assignment(const Clause& clause);

/// Connected components of the body under shared non-head variables, in
/// order of first occurrence. Atoms inside a group keep body order.
std::vector<PredicateGroup> literal_groups(const Clause& clause);

/// Variant-invariant key for an atom set. Two sets receive the same key iff
/// they are equal up to a bijective renaming of variables outside `frozen`.
std::string canonical_key(std::span<const Atom> atoms, const VariableSet& frozen);

/// Canonical key of a whole body: the sorted multiset of its group keys.
std::string body_key(const Clause& clause);

std::string to_string(const Term& term);
std::string to_string(const Atom& atom);
/// Atoms joined with ", ".
std::string to_string(std::span<const Atom> atoms);
/// `<Head> :- <atom>, ..., <atom>.` without the value.
std::string rule_text(const Clause& clause);

}  // namespace cote
