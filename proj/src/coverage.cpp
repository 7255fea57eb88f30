#include "cote/coverage.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cote {

int FactBase::intern(const std::string& name) {
  auto [it, fresh] = constant_ids_.emplace(name, static_cast<int>(constants_.size()));
  if (fresh) constants_.push_back(name);
  return it->second;
}

void FactBase::add(const Atom& fact) {
  if (!fact.is_ground()) throw std::invalid_argument("fact " + to_string(fact) + " is not ground");
  std::vector<int> row;
  row.reserve(fact.arity());
  for (const Term& t : fact.args) row.push_back(intern(t.name));

  const auto key = std::make_pair(fact.predicate, fact.arity());
  auto [it, fresh] = relations_.try_emplace(key);
  Relation& rel = it->second;
  if (fresh) {
    rel.arity = fact.arity();
    rel.by_position.resize(rel.arity);
    relation_order_.push_back(key);
  }
  if (!rel.members.insert(row).second) return;
  const auto id = static_cast<std::uint32_t>(rel.arity == 0 ? 0 : rel.tuples.size() / rel.arity);
  for (std::size_t p = 0; p < row.size(); ++p) rel.by_position[p][row[p]].push_back(id);
  rel.tuples.insert(rel.tuples.end(), row.begin(), row.end());
  ++size_;
}

bool FactBase::contains(const Atom& fact) const {
  const Relation* rel = relation(fact.predicate, fact.arity());
  if (!rel || !fact.is_ground()) return false;
  std::vector<int> row;
  for (const Term& t : fact.args) {
    auto id = constant_id(t.name);
    if (!id) return false;
    row.push_back(*id);
  }
  return rel->members.contains(row);
}

std::optional<int> FactBase::constant_id(const std::string& name) const {
  if (auto it = constant_ids_.find(name); it != constant_ids_.end()) return it->second;
  return std::nullopt;
}

const FactBase::Relation* FactBase::relation(const std::string& predicate, std::size_t arity) const {
  auto it = relations_.find({predicate, arity});
  return it == relations_.end() ? nullptr : &it->second;
}

std::vector<Atom> FactBase::facts() const {
  std::vector<Atom> out;
  for (const auto& key : relation_order_) {
    const Relation& rel = relations_.at(key);
    if (rel.arity == 0) {
      out.push_back(Atom{key.first, {}});
      continue;
    }
    for (std::size_t i = 0; i < rel.size(); ++i) {
      Atom a{key.first, {}};
      for (int id : rel.row(i)) a.args.push_back(Term::constant(constant_name(id)));
      out.push_back(std::move(a));
    }
  }
  return out;
}

CompiledQuery::CompiledQuery(const FactBase& facts, const std::vector<std::string>& head_variables,
                             std::span<const Atom> body, QueryWarnings* warnings)
    : facts_(facts) {
  std::unordered_map<std::string, int> head_slots;
  for (std::size_t i = 0; i < head_variables.size(); ++i) {
    head_slots.emplace(head_variables[i], static_cast<int>(i));
  }
  std::unordered_map<std::string, int> locals;
  for (const Atom& atom : body) {
    Goal goal;
    goal.relation = facts.relation(atom.predicate, atom.arity());
    if (!goal.relation) {
      unsatisfiable_ = true;
      if (warnings) warnings->unknown_predicates.insert(atom.predicate + "/" + std::to_string(atom.arity()));
    }
    for (const Term& t : atom.args) {
      Arg arg;
      if (t.is_constant()) {
        arg.kind = Arg::Kind::Constant;
        auto id = facts.constant_id(t.name);
        if (!id) unsatisfiable_ = true;
        arg.value = id.value_or(-1);
      } else if (auto h = head_slots.find(t.name); h != head_slots.end()) {
        arg.kind = Arg::Kind::Head;
        arg.value = h->second;
      } else {
        arg.kind = Arg::Kind::Local;
        arg.value = locals.emplace(t.name, static_cast<int>(locals.size())).first->second;
      }
      goal.args.push_back(arg);
    }
    goals_.push_back(std::move(goal));
  }
  local_count_ = locals.size();
}

bool CompiledQuery::satisfied(std::span<const std::string> head_constants) const {
  std::vector<int> ids;
  ids.reserve(head_constants.size());
  for (const std::string& c : head_constants) ids.push_back(facts_.constant_id(c).value_or(-1));
  return satisfied_ids(ids);
}

bool CompiledQuery::satisfied_ids(std::span<const int> head_ids) const {
  if (unsatisfiable_) return false;
  if (goals_.empty()) return true;
  std::vector<int> locals(local_count_, -1);
  std::vector<bool> done(goals_.size(), false);
  return search(locals, head_ids, done, goals_.size());
}

bool CompiledQuery::search(std::vector<int>& locals, std::span<const int> head, std::vector<bool>& done,
                           std::size_t remaining) const {
  if (remaining == 0) return true;

  auto value_of = [&](const Arg& a) -> int {
    switch (a.kind) {
      case Arg::Kind::Constant:
        return a.value;
      case Arg::Kind::Head: {
        const auto i = static_cast<std::size_t>(a.value);
        if (i >= head.size()) throw std::invalid_argument("head binding is missing a variable");
        return head[i] < 0 ? -2 : head[i];  // -2: bound to a constant with no facts
      }
      case Arg::Kind::Local:
        return locals[static_cast<std::size_t>(a.value)];
    }
    return -1;
  };

  // Most constrained goal first: the shortest posting list over bound
  // positions, or the whole relation when nothing is bound.
  std::size_t best = goals_.size();
  std::size_t best_count = std::numeric_limits<std::size_t>::max();
  const std::vector<std::uint32_t>* best_postings = nullptr;
  for (std::size_t g = 0; g < goals_.size(); ++g) {
    if (done[g]) continue;
    const Goal& goal = goals_[g];
    std::size_t count = goal.relation->size();
    const std::vector<std::uint32_t>* postings = nullptr;
    for (std::size_t p = 0; p < goal.args.size(); ++p) {
      const int v = value_of(goal.args[p]);
      if (v == -1) continue;
      auto it = goal.relation->by_position[p].find(v);
      if (it == goal.relation->by_position[p].end()) {
        count = 0;
        postings = nullptr;
        break;
      }
      if (!postings || it->second.size() < count) {
        count = it->second.size();
        postings = &it->second;
      }
    }
    if (count < best_count) {
      best_count = count;
      best = g;
      best_postings = postings;
      if (count == 0) break;
    }
  }
  if (best_count == 0) return false;

  const Goal& goal = goals_[best];
  const FactBase::Relation& rel = *goal.relation;
  done[best] = true;
  std::vector<int> bound_here;
  auto try_row = [&](std::size_t r) {
    auto row = rel.row(r);
    bound_here.clear();
    bool ok = true;
    for (std::size_t p = 0; p < goal.args.size() && ok; ++p) {
      const Arg& a = goal.args[p];
      const int v = value_of(a);
      if (v == -1) {
        locals[static_cast<std::size_t>(a.value)] = row[p];
        bound_here.push_back(a.value);
      } else if (v != row[p]) {
        ok = false;
      }
    }
    if (ok && search(locals, head, done, remaining - 1)) return true;
    for (int slot : bound_here) locals[static_cast<std::size_t>(slot)] = -1;
    return false;
  };

  bool found = false;
  if (rel.arity == 0) {
    found = search(locals, head, done, remaining - 1);
  } else if (best_postings) {
    for (std::uint32_t r : *best_postings) {
      if (try_row(r)) {
        found = true;
        break;
      }
    }
  } else {
    for (std::size_t r = 0; r < rel.size(); ++r) {
      if (try_row(r)) {
        found = true;
        break;
      }
    }
  }
  done[best] = false;
  return found;
}

HeadBinding bind_head(const Atom& target, const Atom& ground) {
  if (target.predicate != ground.predicate || target.arity() != ground.arity()) {
    throw std::invalid_argument("instance " + to_string(ground) + " does not match target " +
                                to_string(target));
  }
  HeadBinding binding;
  for (std::size_t i = 0; i < target.arity(); ++i) {
    if (!ground.args[i].is_constant()) {
      throw std::invalid_argument("instance " + to_string(ground) + " is not ground");
    }
    binding[target.args[i].name] = ground.args[i].name;
  }
  return binding;
}

bool satisfies(const FactBase& facts, const HeadBinding& binding, std::span<const Atom> body,
               QueryWarnings* warnings) {
  std::vector<std::string> names;
  std::vector<std::string> values;
  for (const auto& [var, value] : binding) {
    names.push_back(var);
    values.push_back(value);
  }
  return CompiledQuery(facts, names, body, warnings).satisfied(values);
}

namespace {

std::vector<std::string> head_names(const Atom& target) {
  std::vector<std::string> names;
  for (const Term& t : target.args) names.push_back(t.name);
  return names;
}

}  // namespace

CoverageSet group_coverage(const FactBase& facts, const ExampleSet& examples, const Atom& target,
                           const PredicateGroup& group, QueryWarnings* warnings) {
  const CompiledQuery query(facts, head_names(target), group.atoms, warnings);
  CoverageSet bits(examples.size());
  for (std::size_t e = 0; e < examples.size(); ++e) {
    std::vector<std::string> values;
    for (const Term& t : examples.examples[e].atom.args) values.push_back(t.name);
    if (query.satisfied(values)) bits.set(e);
  }
  return bits;
}

CoverageCache::CoverageCache(const FactBase& facts, const ExampleSet& examples, Atom target)
    : facts_(facts), examples_(examples), target_(std::move(target)) {
  for (const Example& ex : examples_.examples) {
    if (ex.atom.predicate != target_.predicate || ex.atom.arity() != target_.arity()) {
      throw std::invalid_argument("example " + to_string(ex.atom) + " does not match target " +
                                  to_string(target_));
    }
    std::vector<int> ids;
    for (const Term& t : ex.atom.args) ids.push_back(facts_.constant_id(t.name).value_or(-1));
    head_ids_.push_back(std::move(ids));
  }
}

const CoverageSet& CoverageCache::group(const PredicateGroup& g) {
  if (auto it = groups_.find(g.key); it != groups_.end()) return it->second;
  ++group_evaluations_;
  const CompiledQuery query(facts_, head_names(target_), g.atoms, &warnings_);
  CoverageSet bits(examples_.size());
  for (std::size_t e = 0; e < head_ids_.size(); ++e) {
    if (query.satisfied_ids(head_ids_[e])) bits.set(e);
  }
  return groups_.emplace(g.key, std::move(bits)).first->second;
}

CoverageSet CoverageCache::all() const {
  CoverageSet bits(examples_.size());
  bits.set();
  return bits;
}

CoverageSet CoverageCache::clause(std::span<const PredicateGroup> groups) {
  std::vector<std::string> keys;
  for (const PredicateGroup& g : groups) keys.push_back(g.key);
  std::sort(keys.begin(), keys.end());
  std::string key;
  for (const std::string& k : keys) {
    key += k;
    key += " | ";
  }
  if (auto it = clauses_.find(key); it != clauses_.end()) return it->second;
  CoverageSet bits = all();
  for (const PredicateGroup& g : groups) bits &= group(g);
  clauses_.emplace(std::move(key), bits);
  return bits;
}

CoverageSet CoverageCache::clause(const Clause& c) { return clause(literal_groups(c)); }

CoverageSet clause_coverage(std::span<const PredicateGroup> groups, CoverageCache& cache) {
  return cache.clause(groups);
}

}  // namespace cote
