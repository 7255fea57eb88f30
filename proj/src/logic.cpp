#include "cote/logic.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace cote {

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

VariableSet Clause::head_variables() const { return variables_of(head); }

std::string_view to_string(CombineMode mode) {
  return mode == CombineMode::Sum ? "sum" : "average";
}

VariableSet variables_of(const Atom& atom) {
  VariableSet vars;
  for (const Term& t : atom.args) {
    if (t.is_variable()) vars.insert(t.name);
  }
  return vars;
}

VariableSet variables_of(std::span<const Atom> atoms) {
  VariableSet vars;
  for (const Atom& a : atoms) {
    for (const Term& t : a.args) {
      if (t.is_variable()) vars.insert(t.name);
    }
  }
  return vars;
}

void validate_head(const Atom& head) {
  std::set<std::string> seen;
  for (const Term& t : head.args) {
    if (!t.is_variable()) {
      throw std::invalid_argument("head argument '" + t.name + "' of " + head.predicate +
                                  " is not a variable");
    }
    if (!seen.insert(t.name).second) {
      throw std::invalid_argument("head variable '" + t.name + "' of " + head.predicate +
                                  " is repeated");
    }
  }
}

Clause standardize_apart(const Clause& clause, std::string_view tag) {
  const VariableSet head = clause.head_variables();
  Substitution theta;
  for (const std::string& v : variables_of(clause.body)) {
    if (!head.contains(v)) theta.emplace(v, Term::variable(v + "_" + std::string(tag)));
  }
  Clause out = clause;
  out.body = apply_substitution(clause.body, theta);
  return out;
}

Atom apply_substitution(const Atom& atom, const Substitution& theta) {
  Atom out = atom;
  for (Term& t : out.args) {
    if (!t.is_variable()) continue;
    if (auto it = theta.find(t.name); it != theta.end()) t = it->second;
  }
  return out;
}

std::vector<Atom> apply_substitution(std::span<const Atom> atoms, const Substitution& theta) {
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const Atom& a : atoms) out.push_back(apply_substitution(a, theta));
  return out;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller root wins so that a component is named by its first atom.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::size_t> group_assignment(const Clause& clause) {
  const VariableSet head = clause.head_variables();
  const auto& body = clause.body;
  DisjointSets sets(body.size());
  std::unordered_map<std::string, std::size_t> first_atom;
  for (std::size_t i = 0; i < body.size(); ++i) {
    for (const Term& t : body[i].args) {
      if (!t.is_variable() || head.contains(t.name)) continue;
      auto [it, fresh] = first_atom.emplace(t.name, i);
      if (!fresh) sets.unite(it->second, i);
    }
  }
  std::vector<std::size_t> assignment(body.size());
  std::unordered_map<std::size_t, std::size_t> ordinal_of_root;
  for (std::size_t i = 0; i < body.size(); ++i) {
    auto [it, fresh] = ordinal_of_root.emplace(sets.find(i), ordinal_of_root.size());
    assignment[i] = it->second;
  }
  return assignment;
}

std::vector<PredicateGroup> literal_groups(const Clause& clause) {
  const VariableSet head = clause.head_variables();
  const std::vector<std::size_t> assignment = group_assignment(clause);
  std::vector<PredicateGroup> groups;
  for (std::size_t i = 0; i < clause.body.size(); ++i) {
    if (assignment[i] == groups.size()) groups.push_back(PredicateGroup{{}, clause.provenance, {}});
    groups[assignment[i]].atoms.push_back(clause.body[i]);
  }
  for (PredicateGroup& g : groups) g.key = canonical_key(g.atoms, head);
  return groups;
}

namespace {

void append_quoted(std::string& out, std::string_view name) {
  out += '"';
  for (char c : name) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
}

// Finds the lexicographically smallest sequence of atom encodings over all
// atom orderings, where body-local variables are numbered by first
// appearance. Only atoms tied on their encoding are branched on.
class KeySearch {
 public:
  KeySearch(std::span<const Atom> atoms, const VariableSet& frozen)
      : atoms_(atoms), frozen_(frozen), used_(atoms.size(), false) {}

  std::string run() {
    std::vector<std::string> current;
    std::unordered_map<std::string, int> numbering;
    descend(current, numbering);
    std::string key;
    for (std::size_t i = 0; i < best_.size(); ++i) {
      if (i) key += " & ";
      key += best_[i];
    }
    return key;
  }

 private:
  // Symmetric groups could make the tie search factorial; past this many
  // complete orderings the best one found so far is used.
  static constexpr std::size_t kMaxLeaves = 20000;

  std::string encode(const Atom& atom, std::unordered_map<std::string, int>& numbering) const {
    std::string s = atom.predicate;
    s += '/';
    s += std::to_string(atom.args.size());
    s += '(';
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (i) s += ',';
      const Term& t = atom.args[i];
      if (t.is_constant()) {
        append_quoted(s, t.name);
      } else if (frozen_.contains(t.name)) {
        s += '?';
        s += t.name;
      } else {
        auto [it, fresh] = numbering.emplace(t.name, static_cast<int>(numbering.size()));
        s += '_';
        s += std::to_string(it->second);
      }
    }
    s += ')';
    return s;
  }

  void descend(std::vector<std::string>& current, std::unordered_map<std::string, int>& numbering) {
    if (leaves_ >= kMaxLeaves) return;
    if (current.size() == atoms_.size()) {
      ++leaves_;
      if (best_.empty() && !atoms_.empty()) {
        best_ = current;
      } else if (current < best_) {
        best_ = current;
      }
      return;
    }
    std::string min_code;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (used_[i]) continue;
      auto trial = numbering;
      std::string code = encode(atoms_[i], trial);
      if (ties.empty() || code < min_code) {
        min_code = std::move(code);
        ties.assign(1, i);
      } else if (code == min_code) {
        ties.push_back(i);
      }
    }
    // Prune branches whose prefix is already worse than the best sequence.
    if (!best_.empty()) {
      const std::size_t d = current.size();
      const auto cmp = std::lexicographical_compare_three_way(
          current.begin(), current.end(), best_.begin(), best_.begin() + static_cast<std::ptrdiff_t>(d));
      if (cmp > 0 || (cmp == 0 && min_code > best_[d])) return;
    }
    for (std::size_t i : ties) {
      auto next = numbering;
      current.push_back(encode(atoms_[i], next));
      used_[i] = true;
      descend(current, next);
      used_[i] = false;
      current.pop_back();
    }
  }

  std::span<const Atom> atoms_;
  const VariableSet& frozen_;
  std::vector<bool> used_;
  std::vector<std::string> best_;
  std::size_t leaves_ = 0;
};

}  // namespace

std::string canonical_key(std::span<const Atom> atoms, const VariableSet& frozen) {
  return KeySearch(atoms, frozen).run();
}

std::string body_key(const Clause& clause) {
  std::vector<std::string> keys;
  for (const PredicateGroup& g : literal_groups(clause)) keys.push_back(g.key);
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) out += " | ";
    out += keys[i];
  }
  return out;
}

namespace {

bool is_bare_constant(std::string_view name) {
  if (name.empty()) return false;
  const char c0 = name.front();
  if (!((c0 >= 'A' && c0 <= 'Z') || (c0 >= '0' && c0 <= '9'))) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

}  // namespace

std::string to_string(const Term& term) {
  if (term.is_variable() || is_bare_constant(term.name)) return term.name;
  std::string out;
  append_quoted(out, term.name);
  return out;
}

std::string to_string(const Atom& atom) {
  std::string out = atom.predicate;
  if (atom.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ',';
    out += to_string(atom.args[i]);
  }
  out += ')';
  return out;
}

std::string to_string(std::span<const Atom> atoms) {
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += ", ";
    out += to_string(atoms[i]);
  }
  return out;
}

std::string rule_text(const Clause& clause) {
  std::string out = to_string(clause.head);
  out += " :- ";
  out += to_string(clause.body);
  out += '.';
  return out;
}

}  // namespace cote
