#include "cote/subsumption.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cote {

SearchBudget::SearchBudget(std::uint64_t max_backtracks, std::chrono::milliseconds deadline)
    : max_backtracks_(max_backtracks), deadline_(deadline) {
  if (max_backtracks == 0) throw std::invalid_argument("search budget needs at least one backtrack");
  if (deadline.count() <= 0) throw std::invalid_argument("search budget deadline must be positive");
}

namespace {

constexpr int kNoMatch = -1;

struct GroundAtom {
  std::size_t predicate = 0;
  std::vector<int> args;
};

struct PatternArg {
  bool is_slot = false;
  int value = kNoMatch;  // term id, or slot index when is_slot
};

struct PatternAtom {
  std::size_t predicate = 0;
  std::vector<PatternArg> args;
};

class Matcher {
 public:
  Matcher(std::span<const Atom> general, std::span<const Atom> specific, const VariableSet& frozen,
          const SearchBudget& budget)
      : budget_(budget), started_(std::chrono::steady_clock::now()) {
    std::unordered_map<std::string, int> term_ids;
    auto term_key = [&](const Term& t) {
      if (t.is_constant()) return "c" + t.name;
      return (frozen.contains(t.name) ? "v" : "s") + t.name;
    };
    std::unordered_map<std::string, std::size_t> predicate_ids;
    auto predicate_id = [&](const Atom& a) {
      const std::string key = a.predicate + "/" + std::to_string(a.arity());
      return predicate_ids.emplace(key, predicate_ids.size()).first->second;
    };

    for (const Atom& a : specific) {
      GroundAtom g{predicate_id(a), {}};
      for (const Term& t : a.args) {
        g.args.push_back(term_ids.emplace(term_key(t), static_cast<int>(term_ids.size())).first->second);
      }
      specific_.push_back(std::move(g));
    }
    by_predicate_.resize(predicate_ids.size());
    for (std::size_t i = 0; i < specific_.size(); ++i) by_predicate_[specific_[i].predicate].push_back(i);

    std::unordered_map<std::string, int> slots;
    for (const Atom& a : general) {
      const std::string key = a.predicate + "/" + std::to_string(a.arity());
      auto pit = predicate_ids.find(key);
      if (pit == predicate_ids.end()) {
        impossible_ = true;
        return;
      }
      PatternAtom p{pit->second, {}};
      for (const Term& t : a.args) {
        if (t.is_variable() && !frozen.contains(t.name)) {
          const int slot = slots.emplace(t.name, static_cast<int>(slots.size())).first->second;
          p.args.push_back({true, slot});
        } else {
          auto tit = term_ids.find(term_key(t));
          p.args.push_back({false, tit == term_ids.end() ? kNoMatch : tit->second});
        }
      }
      general_.push_back(std::move(p));
    }
    binding_.assign(slots.size(), kNoMatch);
    matched_.assign(general_.size(), false);
  }

  SubsumptionOutcome run() {
    if (impossible_) return {Subsumes::No, 0};
    bool found = false;
    try {
      found = search(0);
    } catch (const OutOfBudget&) {
      return {Subsumes::BudgetExceeded, backtracks_};
    }
    return {found ? Subsumes::Yes : Subsumes::No, backtracks_};
  }

 private:
  struct OutOfBudget {};

  bool compatible(const PatternAtom& p, const GroundAtom& g) const {
    for (std::size_t i = 0; i < p.args.size(); ++i) {
      const PatternArg& arg = p.args[i];
      if (arg.is_slot) {
        const int bound = binding_[static_cast<std::size_t>(arg.value)];
        if (bound != kNoMatch && bound != g.args[i]) return false;
      } else if (arg.value != g.args[i]) {
        return false;
      }
    }
    return true;
  }

  // Binds the pattern's unbound slots to `g`; the slots written are pushed on
  // `trail`. Fails when one variable occurs twice with different images.
  bool bind(const PatternAtom& p, const GroundAtom& g, std::vector<int>& trail) {
    for (std::size_t i = 0; i < p.args.size(); ++i) {
      const PatternArg& arg = p.args[i];
      if (!arg.is_slot) continue;
      int& bound = binding_[static_cast<std::size_t>(arg.value)];
      if (bound == kNoMatch) {
        bound = g.args[i];
        trail.push_back(arg.value);
      } else if (bound != g.args[i]) {
        return false;
      }
    }
    return true;
  }

  void charge() {
    ++backtracks_;
    if (backtracks_ > budget_.max_backtracks()) throw OutOfBudget{};
    if ((backtracks_ & 0xff) == 0 && std::chrono::steady_clock::now() - started_ > budget_.deadline()) {
      throw OutOfBudget{};
    }
  }

  bool search(std::size_t depth) {
    if (depth == general_.size()) return true;

    // Most constrained pattern first: fewest compatible candidates.
    std::size_t best = general_.size();
    std::size_t best_count = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < general_.size(); ++i) {
      if (matched_[i]) continue;
      std::size_t count = 0;
      for (std::size_t g : by_predicate_[general_[i].predicate]) {
        if (compatible(general_[i], specific_[g])) ++count;
      }
      if (count < best_count) {
        best_count = count;
        best = i;
        if (count == 0) break;
      }
    }
    if (best_count == 0) {
      charge();
      return false;
    }

    const PatternAtom& p = general_[best];
    matched_[best] = true;
    std::vector<int> trail;
    for (std::size_t g : by_predicate_[p.predicate]) {
      if (!compatible(p, specific_[g])) continue;
      trail.clear();
      if (bind(p, specific_[g], trail) && search(depth + 1)) return true;
      for (int slot : trail) binding_[static_cast<std::size_t>(slot)] = kNoMatch;
      charge();
    }
    matched_[best] = false;
    return false;
  }

  const SearchBudget& budget_;
  std::chrono::steady_clock::time_point started_;
  std::vector<GroundAtom> specific_;
  std::vector<std::vector<std::size_t>> by_predicate_;
  std::vector<PatternAtom> general_;
  std::vector<int> binding_;
  std::vector<bool> matched_;
  std::uint64_t backtracks_ = 0;
  bool impossible_ = false;
};

}  // namespace

SubsumptionOutcome theta_subsumes(std::span<const Atom> general, std::span<const Atom> specific,
                                  const VariableSet& frozen, const SearchBudget& budget) {
  return Matcher(general, specific, frozen, budget).run();
}

Clause clause_reduction(const Clause& clause, const SearchBudget& budget) {
  const VariableSet head = clause.head_variables();
  std::vector<Atom> body = clause.body;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < body.size();) {
      std::vector<Atom> shorter = body;
      shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(i));
      if (theta_subsumes(body, shorter, head, budget).result == Subsumes::Yes) {
        body = std::move(shorter);
        changed = true;
      } else {
        ++i;
      }
    }
  }
  Clause out = clause;
  out.body = std::move(body);
  return out;
}

std::optional<std::size_t> SubsumptionMatrix::index_of(const std::string& key) const {
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t SubsumptionMatrix::require_index(const std::string& key) const {
  if (auto i = index_of(key)) return *i;
  throw std::out_of_range("predicate group '" + key + "' is not in the subsumption matrix");
}

namespace {

std::string_view result_name(Subsumes s) {
  switch (s) {
    case Subsumes::Yes:
      return "true";
    case Subsumes::No:
      return "false";
    case Subsumes::BudgetExceeded:
      return "budget_exceeded";
  }
  return "false";
}

void write_csv_field(std::ostream& out, const std::string& field) {
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

void SubsumptionMatrix::write_diagnostics(std::ostream& out) const {
  out << "key_i,key_j,result,backtracks\n";
  for (const CellRecord& r : records_) {
    write_csv_field(out, keys_[r.general]);
    out << ',';
    write_csv_field(out, keys_[r.specific]);
    out << ',' << result_name(r.result) << ',' << r.backtracks << '\n';
  }
}

SubsumptionMatrix build_sm(std::span<const PredicateGroup> groups, const VariableSet& frozen,
                           const SearchBudget& budget, const Deadline& deadline) {
  SubsumptionMatrix sm;
  std::vector<const PredicateGroup*> distinct;
  for (const PredicateGroup& g : groups) {
    if (sm.index_.emplace(g.key, sm.keys_.size()).second) {
      sm.keys_.push_back(g.key);
      distinct.push_back(&g);
    }
  }
  const std::size_t m = distinct.size();
  sm.cells_.assign(m * m, 0);
  sm.records_.reserve(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (deadline.expired()) throw DeadlineExceeded("subsumption-matrix");
      SubsumptionOutcome outcome{Subsumes::Yes, 0};
      if (i != j) outcome = theta_subsumes(distinct[i]->atoms, distinct[j]->atoms, frozen, budget);
      sm.cells_[i * m + j] = outcome.result == Subsumes::Yes ? 1 : 0;
      if (outcome.result == Subsumes::BudgetExceeded) ++sm.degraded_;
      sm.records_.push_back({i, j, outcome.result, outcome.backtracks});
    }
  }
  return sm;
}

}  // namespace cote
