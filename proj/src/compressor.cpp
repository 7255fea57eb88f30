#include "cote/compressor.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace cote {

namespace {

void collect_paths(const TildeTree::Node& node, const Atom& target, std::size_t tree_index,
                   std::vector<Atom>& path, std::vector<Clause>& out) {
  if (node.is_leaf()) {
    out.push_back(Clause{target, path, node.value, {LeafRef{tree_index, node.leaf_index}}});
    return;
  }
  path.insert(path.end(), node.test.begin(), node.test.end());
  collect_paths(*node.yes, target, tree_index, path, out);
  path.resize(path.size() - node.test.size());
  collect_paths(*node.no, target, tree_index, path, out);
}

void check_signatures(const TildeTree::Node& node, std::map<std::string, std::size_t>& arity) {
  for (const Atom& a : node.test) {
    auto [it, fresh] = arity.emplace(a.predicate, a.arity());
    if (!fresh && it->second != a.arity()) {
      throw std::invalid_argument("predicate " + a.predicate + " used with arities " +
                                  std::to_string(it->second) + " and " + std::to_string(a.arity()));
    }
  }
  if (!node.is_leaf()) {
    check_signatures(*node.yes, arity);
    check_signatures(*node.no, arity);
  }
}

}  // namespace

DecisionList tree_to_list(const TildeTree& tree, const Atom& target, std::size_t tree_index,
                          CombineMode combine) {
  DecisionList list;
  list.target = target;
  list.combine = combine;
  list.tree_count = 1;
  list.method = "tree";
  std::vector<Atom> path;
  collect_paths(tree.root(), target, tree_index, path, list.rules);
  return list;
}

std::string tree_tag(std::size_t index) { return "t" + std::to_string(index); }

Prepared prep(const Ensemble& ensemble, const SearchBudget& budget, bool deduplicate) {
  if (ensemble.trees.empty()) throw std::invalid_argument("ensemble has no trees");
  validate_head(ensemble.target);
  std::map<std::string, std::size_t> arity{{ensemble.target.predicate, ensemble.target.arity()}};
  for (const TildeTree& tree : ensemble.trees) check_signatures(tree.root(), arity);

  Prepared out;
  out.target = ensemble.target;
  out.combine = ensemble.combine;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < ensemble.trees.size(); ++i) {
    DecisionList list = tree_to_list(ensemble.trees[i], ensemble.target, i, ensemble.combine);
    for (Clause& rule : list.rules) {
      rule = standardize_apart(clause_reduction(rule, budget), tree_tag(i));
      for (PredicateGroup& g : literal_groups(rule)) {
        ++out.groups_before_dedup;
        if (!deduplicate || seen.emplace(g.key, out.groups.size()).second) out.groups.push_back(std::move(g));
      }
    }
    out.lists.push_back(std::move(list));
  }
  return out;
}

Clause add_clauses(const Clause& first, const Clause& second) {
  const VariableSet head = first.head_variables();
  const VariableSet a = variables_of(first.body);
  for (const std::string& v : variables_of(second.body)) {
    if (!head.contains(v) && a.contains(v)) {
      throw std::logic_error("rules to combine share the body variable '" + v + "'");
    }
  }
  Clause out = first;
  out.body.insert(out.body.end(), second.body.begin(), second.body.end());
  out.value = first.value + second.value;
  out.provenance.insert(out.provenance.end(), second.provenance.begin(), second.provenance.end());
  return out;
}

std::vector<MergePair> merge_order(const DecisionList& first, const DecisionList& second) {
  std::vector<MergePair> order;
  order.reserve(first.rules.size() * second.rules.size());
  for (std::size_t j = 0; j < first.rules.size(); ++j) {
    for (std::size_t k = 0; k < second.rules.size(); ++k) order.emplace_back(j, k);
  }
  return order;
}

DecisionList merge_lists(const DecisionList& first, const DecisionList& second,
                         const std::vector<MergePair>& order) {
  DecisionList out;
  out.target = first.target;
  out.combine = first.combine;
  out.tree_count = first.tree_count + second.tree_count;
  out.method = "merge";
  out.rules.reserve(order.size());
  for (const auto& [j, k] : order) out.rules.push_back(add_clauses(first.rules.at(j), second.rules.at(k)));
  return out;
}

namespace {

Clause keep_groups(const Clause& clause, const std::vector<std::size_t>& assignment,
                   const std::vector<bool>& retained) {
  Clause out = clause;
  out.body.clear();
  for (std::size_t i = 0; i < clause.body.size(); ++i) {
    if (retained[assignment[i]]) out.body.push_back(clause.body[i]);
  }
  return out;
}

std::vector<std::size_t> sm_indices(const std::vector<PredicateGroup>& groups, const SubsumptionMatrix& sm) {
  std::vector<std::size_t> idx;
  idx.reserve(groups.size());
  for (const PredicateGroup& g : groups) idx.push_back(sm.require_index(g.key));
  return idx;
}

}  // namespace

Clause reduce_clause(const Clause& clause, const SubsumptionMatrix& sm) {
  const std::vector<PredicateGroup> groups = literal_groups(clause);
  if (groups.size() < 2) return clause;
  const std::vector<std::size_t> idx = sm_indices(groups, sm);
  std::vector<bool> retained(groups.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!retained[g]) continue;
      for (std::size_t h = 0; h < groups.size(); ++h) {
        if (h == g || !retained[h] || !sm.subsumes(idx[g], idx[h])) continue;
        // Mutual subsumption with a later group: that group is the one dropped.
        if (h > g && sm.subsumes(idx[h], idx[g])) continue;
        retained[g] = false;
        changed = true;
        break;
      }
    }
  }
  return keep_groups(clause, group_assignment(clause), retained);
}

namespace {

std::vector<Clause> reduce_list_until(const std::vector<Clause>& rules, const SubsumptionMatrix& sm,
                                      const ListReductionOptions& options, const Deadline& deadline,
                                      const std::vector<std::size_t>& rules_per_merge, std::size_t merges) {
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(rules.size());
  for (const Clause& c : rules) {
    std::vector<std::size_t> idx = sm_indices(literal_groups(c), sm);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    groups.push_back(std::move(idx));
  }

  auto subsumed_by_groups = [&](std::size_t j, std::size_t k) {
    return std::all_of(groups[j].begin(), groups[j].end(), [&](std::size_t gj) {
      return std::any_of(groups[k].begin(), groups[k].end(), [&](std::size_t gk) { return sm.subsumes(gj, gk); });
    });
  };

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    if (deadline.expired()) throw CompressionAborted("reduce-list", merges, rules.size(), rules_per_merge);
    if (k + 1 == rules.size() && rules[k].body.empty()) {
      kept.push_back(k);
      continue;
    }
    bool subsumed = false;
    for (std::size_t j : kept) {
      if (subsumed_by_groups(j, k) ||
          (options.exact_clause_subsumption &&
           theta_subsumes(rules[j].body, rules[k].body, rules[k].head_variables(), options.budget).result ==
               Subsumes::Yes)) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) kept.push_back(k);
  }

  std::vector<Clause> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) out.push_back(rules[k]);
  return out;
}

}  // namespace

std::vector<Clause> reduce_list(const std::vector<Clause>& rules, const SubsumptionMatrix& sm,
                                const ListReductionOptions& options) {
  return reduce_list_until(rules, sm, options, Deadline::never(), {}, 0);
}

CompressionAborted::CompressionAborted(std::string phase, std::size_t merges_completed,
                                       std::size_t rules_in_progress, std::vector<std::size_t> rules_per_merge)
    : std::runtime_error("compression aborted during " + phase + " after " + std::to_string(merges_completed) +
                         " merge(s)"),
      phase_(std::move(phase)),
      merges_completed_(merges_completed),
      rules_in_progress_(rules_in_progress),
      rules_per_merge_(std::move(rules_per_merge)) {}

ScoteResult scote(const Prepared& prepared, const ScoteOptions& options) {
  if (prepared.lists.empty()) throw std::invalid_argument("nothing to compress");
  ScoteResult result;
  const VariableSet head = variables_of(prepared.target);
  try {
    result.sm = build_sm(prepared.groups, head, options.budget, options.deadline);
  } catch (const DeadlineExceeded& e) {
    throw CompressionAborted(e.phase(), 0, 0, {});
  }

  const ListReductionOptions list_options{options.exact_clause_subsumption, options.budget};
  DecisionList current = prepared.lists.front();
  for (std::size_t i = 1; i < prepared.lists.size(); ++i) {
    const DecisionList& next = prepared.lists[i];
    std::vector<Clause> merged;
    merged.reserve(current.rules.size() * next.rules.size());
    for (const auto& [j, k] : merge_order(current, next)) {
      if (options.deadline.expired()) {
        throw CompressionAborted("merge", i - 1, merged.size(), result.rules_per_merge);
      }
      merged.push_back(reduce_clause(add_clauses(current.rules[j], next.rules[k]), result.sm));
    }
    current.rules =
        reduce_list_until(merged, result.sm, list_options, options.deadline, result.rules_per_merge, i - 1);
    current.tree_count += next.tree_count;
    result.rules_per_merge.push_back(current.rules.size());
  }
  current.method = "scote";
  result.list = std::move(current);
  return result;
}

CoverageSet check_coverage(const Clause& clause, CoverageCache& cache, const CoverageSet& claimed) {
  return cache.clause(clause) - claimed;
}

Clause prune_clause(const Clause& clause, CoverageCache& cache) {
  const std::vector<PredicateGroup> groups = literal_groups(clause);
  if (groups.empty()) return clause;
  const CoverageSet target = cache.clause(groups);
  std::vector<bool> retained(groups.size(), true);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!retained[g]) continue;
      CoverageSet without = cache.all();
      for (std::size_t h = 0; h < groups.size(); ++h) {
        if (h != g && retained[h]) without &= cache.group(groups[h]);
      }
      if (without == target) {
        retained[g] = false;
        changed = true;
      }
    }
  }
  return keep_groups(clause, group_assignment(clause), retained);
}

EcoteResult ecote(const Prepared& prepared, const FactBase& facts, const ExampleSet& examples) {
  if (prepared.lists.empty()) throw std::invalid_argument("nothing to compress");
  CoverageCache cache(facts, examples, prepared.target);
  for (const PredicateGroup& g : prepared.groups) cache.group(g);

  EcoteResult result;
  // Keeps a candidate iff it claims a new example; the final catch-all is
  // always kept so the list stays total.
  auto admit = [&](const Clause& candidate, bool final_rule, CoverageSet& claimed, std::vector<Clause>& out) {
    const CoverageSet active = check_coverage(candidate, cache, claimed);
    if (active.none() && !final_rule) return;
    claimed |= active;
    out.push_back(prune_clause(candidate, cache));
  };

  DecisionList current = prepared.lists.front();
  {
    CoverageSet claimed = cache.none();
    std::vector<Clause> kept;
    for (std::size_t r = 0; r < current.rules.size(); ++r) {
      admit(current.rules[r], r + 1 == current.rules.size(), claimed, kept);
    }
    current.rules = std::move(kept);
  }

  for (std::size_t i = 1; i < prepared.lists.size(); ++i) {
    const DecisionList& next = prepared.lists[i];
    CoverageSet claimed = cache.none();
    std::vector<Clause> merged;
    const std::size_t last_j = current.rules.size() - 1;
    const std::size_t last_k = next.rules.size() - 1;
    for (const auto& [j, k] : merge_order(current, next)) {
      admit(add_clauses(current.rules[j], next.rules[k]), j == last_j && k == last_k, claimed, merged);
    }
    current.rules = std::move(merged);
    current.tree_count += next.tree_count;
    result.rules_per_merge.push_back(current.rules.size());
  }
  current.method = "ecote";
  result.list = std::move(current);
  result.group_evaluations = cache.group_evaluations();
  result.warnings = cache.warnings();
  return result;
}

namespace {

std::vector<std::string> head_names(const Atom& target) {
  std::vector<std::string> names;
  for (const Term& t : target.args) names.push_back(t.name);
  return names;
}

std::vector<int> instance_ids(const Atom& target, const Atom& instance, const FactBase& facts) {
  if (instance.predicate != target.predicate || instance.arity() != target.arity()) {
    throw std::invalid_argument("instance " + to_string(instance) + " does not match target " +
                                to_string(target));
  }
  std::vector<int> ids;
  ids.reserve(instance.arity());
  for (const Term& t : instance.args) ids.push_back(facts.constant_id(t.name).value_or(-1));
  return ids;
}

}  // namespace

ListPredictor::ListPredictor(const DecisionList& list, const FactBase& facts) : list_(list), facts_(facts) {
  if (list.rules.empty()) throw std::invalid_argument("decision list has no rules");
  const std::vector<std::string> head = head_names(list.target);
  std::unordered_map<std::string, std::size_t> by_key;
  for (const Clause& rule : list.rules) {
    std::vector<std::size_t> ids;
    for (const PredicateGroup& g : literal_groups(rule)) {
      auto [it, fresh] = by_key.emplace(g.key, groups_.size());
      if (fresh) groups_.emplace_back(facts, head, g.atoms);
      ids.push_back(it->second);
    }
    rule_groups_.push_back(std::move(ids));
  }
}

std::size_t ListPredictor::firing_rule(const Atom& instance) const {
  const std::vector<int> ids = instance_ids(list_.target, instance, facts_);
  std::vector<signed char> memo(groups_.size(), -1);
  for (std::size_t r = 0; r < rule_groups_.size(); ++r) {
    bool ok = true;
    for (std::size_t g : rule_groups_[r]) {
      if (memo[g] < 0) memo[g] = groups_[g].satisfied_ids(ids) ? 1 : 0;
      if (memo[g] == 0) {
        ok = false;
        break;
      }
    }
    if (ok) return r;
  }
  throw std::logic_error("no rule of the decision list fires; the list lacks a catch-all");
}

double ListPredictor::operator()(const Atom& instance) const {
  const double value = list_.rules[firing_rule(instance)].value;
  if (list_.combine == CombineMode::Average) return value / static_cast<double>(list_.tree_count);
  return value;
}

EnsembleEvaluator::EnsembleEvaluator(const Ensemble& ensemble, const FactBase& facts)
    : ensemble_(ensemble), facts_(facts) {
  if (ensemble.trees.empty()) throw std::invalid_argument("ensemble has no trees");
  for (const TildeTree& tree : ensemble.trees) {
    std::vector<Atom> context;
    roots_.push_back(compile(tree.root(), context));
  }
}

std::size_t EnsembleEvaluator::compile(const TildeTree::Node& node, std::vector<Atom>& context) {
  const std::size_t id = nodes_.size();
  nodes_.emplace_back();
  if (node.is_leaf()) {
    nodes_[id].leaf = true;
    nodes_[id].value = node.value;
    nodes_[id].leaf_index = node.leaf_index;
    return id;
  }
  context.insert(context.end(), node.test.begin(), node.test.end());
  queries_.emplace_back(facts_, head_names(ensemble_.target), context);
  nodes_[id].query = queries_.size() - 1;
  const std::size_t yes = compile(*node.yes, context);
  context.resize(context.size() - node.test.size());
  const std::size_t no = compile(*node.no, context);
  nodes_[id].yes = yes;
  nodes_[id].no = no;
  return id;
}

std::vector<std::size_t> EnsembleEvaluator::leaves(const Atom& instance) const {
  const std::vector<int> ids = instance_ids(ensemble_.target, instance, facts_);
  std::vector<std::size_t> out;
  for (std::size_t root : roots_) {
    const CompiledNode* n = &nodes_[root];
    while (!n->leaf) n = &nodes_[queries_[n->query].satisfied_ids(ids) ? n->yes : n->no];
    out.push_back(n->leaf_index);
  }
  return out;
}

double EnsembleEvaluator::operator()(const Atom& instance) const {
  const std::vector<int> ids = instance_ids(ensemble_.target, instance, facts_);
  double sum = 0.0;
  for (std::size_t root : roots_) {
    const CompiledNode* n = &nodes_[root];
    while (!n->leaf) n = &nodes_[queries_[n->query].satisfied_ids(ids) ? n->yes : n->no];
    sum += n->value;
  }
  if (ensemble_.combine == CombineMode::Average) return sum / static_cast<double>(roots_.size());
  return sum;
}

double predict(const DecisionList& list, const FactBase& facts, const Atom& instance) {
  return ListPredictor(list, facts)(instance);
}

double eval_ensemble(const Ensemble& ensemble, const FactBase& facts, const Atom& instance) {
  return EnsembleEvaluator(ensemble, facts)(instance);
}

}  // namespace cote
