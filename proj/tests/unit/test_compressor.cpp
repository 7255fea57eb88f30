#include <doctest.h>

#include <functional>
#include <set>
#include <sstream>

#include "cote/compressor.hpp"
#include "cote/model_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_models.hpp"

using namespace cote;

namespace {

std::vector<std::string> lines_of(const DecisionList& list) {
  std::vector<std::string> out;
  for (const Clause& r : list.rules) out.push_back(format_value(r.value) + ": " + rule_text(r));
  return out;
}

std::vector<std::string> fixture_lines(const std::string& name) {
  std::vector<std::string> out;
  std::istringstream in(fixtures::text(name));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

Ensemble advisor() { return parse_model(fixtures::text("advisor/advisor.model")); }

// Every instance over the vocabulary plus one constant no fact mentions.
std::vector<Atom> all_instances(const gen::Vocabulary& v) {
  auto constants = v.constants;
  constants.push_back("Fresh");
  return oracle::instances(v.target, constants);
}

}  // namespace

TEST_CASE("tree to list follows yes-before-no paths") {
  const Ensemble e = advisor();
  CHECK(lines_of(tree_to_list(e.trees[0], e.target)) == fixture_lines("advisor/tree0_list.txt"));
  CHECK(lines_of(tree_to_list(e.trees[1], e.target, 1)) == fixture_lines("advisor/tree1_list.txt"));
  const DecisionList single = tree_to_list(TildeTree(TildeTree::leaf(0.5)), e.target);
  REQUIRE(single.rules.size() == 1);
  CHECK(single.rules[0].body.empty());
  CHECK(single.rules[0].value == 0.5);
}

TEST_CASE("tree lists agree with the path-formula evaluator") {
  gen::Rng rng(17);
  for (int round = 0; round < 60; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 3);
    const TildeTree t = gen::tree(rng, vocab);
    const auto facts = gen::facts(rng, vocab, 0.4);
    const DecisionList list = tree_to_list(t, vocab.target);
    const FactBase fb = gen::fact_base(facts);
    const Ensemble single{vocab.target, CombineMode::Sum, {t}};
    for (const Atom& inst : all_instances(vocab)) {
      const double expected = oracle::tree_value(t, vocab.target, facts, inst);
      CHECK(predict(list, fb, inst) == expected);
      CHECK(eval_ensemble(single, fb, inst) == expected);
    }
  }
}

TEST_CASE("prep standardizes apart and deduplicates groups") {
  const Prepared p = prep(advisor());
  REQUIRE(p.lists.size() == 2);
  CHECK(p.lists[0].rules.size() == 5);
  CHECK(to_string(p.lists[1].rules[0].body) == "TaughtBy(f_t1,b,d_t1), Ta(f_t1,a,d_t1)");
  // Publication(c,a),Publication(c,b) and Publication(e,b),Publication(e,a)
  // are variants; Professor(b) recurs four times. PG keeps 7 of 11 groups.
  CHECK(p.groups.size() == 7);
  CHECK(p.groups_before_dedup == 11);
  const Prepared raw = prep(advisor(), {}, false);
  CHECK(raw.groups.size() == 11);
  CHECK_THROWS_AS(prep(Ensemble{parse_atom("T(a)"), CombineMode::Sum, {}}), std::invalid_argument);
}

TEST_CASE("add_clauses concatenates bodies and adds values") {
  const Prepared p = prep(advisor());
  const Clause w2_w9 = add_clauses(p.lists[0].rules[1], p.lists[1].rules[3]);
  CHECK(rule_text(w2_w9) == "AdvisedBy(a,b) :- Professor(b), Publication(c_t0,a), Publication(e_t1,b).");
  CHECK(w2_w9.value == 2 + 256);
  CHECK(literal_groups(w2_w9).size() ==
        literal_groups(p.lists[0].rules[1]).size() + literal_groups(p.lists[1].rules[3]).size());
  const Clause catch_all = add_clauses(p.lists[0].rules[4], p.lists[1].rules[4]);
  CHECK(catch_all.body.empty());
  CHECK(catch_all.value == 528);
  CHECK_THROWS_AS(add_clauses(p.lists[0].rules[0], p.lists[0].rules[1]), std::logic_error);
}

TEST_CASE("merge order is lexicographic") {
  const Prepared p = prep(advisor());
  const auto order = merge_order(p.lists[0], p.lists[1]);
  REQUIRE(order.size() == 25);
  CHECK(order.front() == MergePair{0, 0});
  CHECK(order[1] == MergePair{0, 1});
  CHECK(order.back() == MergePair{4, 4});
  CHECK(lines_of(merge_lists(p.lists[0], p.lists[1], order)) == fixture_lines("advisor/merged.txt"));
}

TEST_CASE("reduce_clause output is equivalent to its input") {
  gen::Rng rng(23);
  for (int round = 0; round < 40; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 3);
    const Prepared p = prep(gen::ensemble(rng, vocab, 2, CombineMode::Sum));
    const SubsumptionMatrix sm = build_sm(p.groups, {"a", "b"});
    const DecisionList merged = merge_lists(p.lists[0], p.lists[1], merge_order(p.lists[0], p.lists[1]));
    for (const Clause& c : merged.rules) {
      const Clause r = reduce_clause(c, sm);
      CHECK(oracle::subsumes(r.body, c.body, {"a", "b"}));
      CHECK(oracle::subsumes(c.body, r.body, {"a", "b"}));
    }
  }
}

TEST_CASE("reduce_list keeps predictions") {
  gen::Rng rng(29);
  for (int round = 0; round < 40; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 3);
    const auto facts = gen::facts(rng, vocab, 0.4);
    const FactBase fb = gen::fact_base(facts);
    const Prepared p = prep(gen::ensemble(rng, vocab, 2, CombineMode::Sum));
    const SubsumptionMatrix sm = build_sm(p.groups, {"a", "b"});
    DecisionList merged = merge_lists(p.lists[0], p.lists[1], merge_order(p.lists[0], p.lists[1]));
    DecisionList reduced = merged;
    reduced.rules = reduce_list(merged.rules, sm);
    CHECK(reduced.rules.size() <= merged.rules.size());
    CHECK(reduced.rules.back().body.empty());
    for (const Atom& inst : all_instances(vocab)) CHECK(predict(reduced, fb, inst) == predict(merged, fb, inst));
  }
  // A duplicate directly below its twin goes.
  Clause c{parse_atom("T(a)"), {parse_atom("P(a)")}, 1.0, {}};
  Clause last{parse_atom("T(a)"), {}, 0.0, {}};
  const SubsumptionMatrix sm = build_sm(literal_groups(c), {"a"});
  CHECK(reduce_list({c, c, last}, sm).size() == 2);
}

TEST_CASE("scote on one tree leaves its list unchanged") {
  const Ensemble e = advisor();
  const Ensemble one{e.target, e.combine, {e.trees[0]}};
  const Prepared p = prep(one);
  const ScoteResult r = scote(p);
  CHECK(r.list.rules == p.lists[0].rules);
  CHECK(r.rules_per_merge.empty());
}

TEST_CASE("scote reduces the advisor ensemble") {
  const ScoteResult r = scote(prep(advisor()));
  const auto lines = lines_of(r.list);
  const auto expected = fixture_lines("advisor/reduced_head.txt");
  REQUIRE(lines.size() >= expected.size());
  CHECK(std::vector<std::string>(lines.begin(), lines.begin() + 3) == expected);
  CHECK(lines.size() < 25);
  CHECK(r.rules_per_merge == std::vector<std::size_t>{lines.size()});
}

TEST_CASE("average mode divides by the tree count") {
  Ensemble e = advisor();
  e.combine = CombineMode::Average;
  const FactBase fb = parse_facts("Professor(Bob).\n");
  const ScoteResult r = scote(prep(e));
  CHECK(r.list.tree_count == 2);
  const Atom inst = parse_atom("AdvisedBy(Ann, Bob)");
  CHECK(predict(r.list, fb, inst) == (8.0 + 512.0) / 2.0);
  CHECK(eval_ensemble(e, fb, inst) == (8.0 + 512.0) / 2.0);
}

TEST_CASE("ensemble evaluator on the advisor trees") {
  const Ensemble e = advisor();
  const FactBase fb = parse_facts("Professor(Bob).\nPublication(P1, Ann).\nPublication(P1, Bob).\n");
  const EnsembleEvaluator eval(e, fb);
  CHECK(eval.leaves(parse_atom("AdvisedBy(Ann, Bob)")) == std::vector<std::size_t>{0, 2});
  CHECK(eval.leaves(parse_atom("AdvisedBy(Cid, Bob)")) == std::vector<std::size_t>{3, 3});
  CHECK(eval(parse_atom("AdvisedBy(Ann, Bob)")) == 1.0 + 128.0);
  const DecisionList d0 = tree_to_list(e.trees[0], e.target);
  CHECK(ListPredictor(d0, fb).firing_rule(parse_atom("AdvisedBy(Ann, Bob)")) == 0);
}

TEST_CASE("scote is logically equivalent on random ensembles") {
  gen::Rng rng(31);
  for (int round = 0; round < 40; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 3);
    const Ensemble e = gen::ensemble(rng, vocab, 3, round % 2 ? CombineMode::Average : CombineMode::Sum);
    const auto facts = gen::facts(rng, vocab, 0.4);
    const FactBase fb = gen::fact_base(facts);
    const DecisionList list = scote(prep(e)).list;
    for (const Atom& inst : all_instances(vocab)) {
      const double expected = oracle::ensemble_value(e, facts, inst);
      CHECK(eval_ensemble(e, fb, inst) == expected);
      CHECK(predict(list, fb, inst) == expected);
      CHECK(oracle::list_value(list, facts, inst) == expected);
    }
  }
}

TEST_CASE("check_coverage and prune_clause") {
  const Prepared p = prep(advisor());
  const FactBase fb = parse_facts("Professor(Bob).\nPublication(P1, Ann).\nPublication(P1, Bob).\n");
  ExampleSet ex;
  ex.examples = {{parse_atom("AdvisedBy(Ann, Bob)"), true}, {parse_atom("AdvisedBy(Bob, Ann)"), false}};
  CoverageCache cache(fb, ex, p.target);
  const Clause w1 = p.lists[0].rules[0];
  CHECK(check_coverage(w1, cache, cache.none()) == cache.clause(w1));
  CHECK(check_coverage(w1, cache, cache.all()).none());
  const Clause single = p.lists[0].rules[3];  // Professor(b)
  CHECK(prune_clause(single, cache).body == single.body);
}

TEST_CASE("pruned clauses keep their exact coverage") {
  gen::Rng rng(37);
  for (int round = 0; round < 60; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 4);
    const auto facts = gen::facts(rng, vocab, 0.35);
    const FactBase fb = gen::fact_base(facts);
    const ExampleSet ex = gen::examples(rng, vocab, 12);
    const Prepared p = prep(gen::ensemble(rng, vocab, 2, CombineMode::Sum));
    CoverageCache cache(fb, ex, p.target);
    const DecisionList merged = merge_lists(p.lists[0], p.lists[1], merge_order(p.lists[0], p.lists[1]));
    for (const Clause& c : merged.rules) {
      const Clause pruned = prune_clause(c, cache);
      CHECK(pruned.body.size() <= c.body.size());
      for (std::size_t i = 0; i < ex.size(); ++i) {
        const HeadBinding h = bind_head(p.target, ex.examples[i].atom);
        CHECK(satisfies(fb, h, pruned.body) == satisfies(fb, h, c.body));
      }
    }
  }
}

TEST_CASE("ecote agrees with the ensemble on training examples") {
  gen::Rng rng(41);
  for (int round = 0; round < 40; ++round) {
    const auto vocab = gen::vocabulary(rng, 3, 5);
    const Ensemble e = gen::ensemble(rng, vocab, 3, CombineMode::Sum);
    const FactBase fb = gen::fact_base(gen::facts(rng, vocab, 0.3));
    const ExampleSet ex = gen::examples(rng, vocab, 15);
    const EcoteResult r = ecote(prep(e), fb, ex);
    CHECK(r.list.rules.back().body.empty());
    for (const std::size_t n : r.rules_per_merge) CHECK(n <= ex.size() + 1);
    // Active coverages of the non-final rules are non-empty and disjoint.
    CoverageCache cache(fb, ex, e.target);
    CoverageSet claimed = cache.none();
    for (std::size_t i = 0; i + 1 < r.list.rules.size(); ++i) {
      const CoverageSet active = check_coverage(r.list.rules[i], cache, claimed);
      CHECK(active.any());
      claimed |= active;
    }
    for (const Example& x : ex.examples) CHECK(predict(r.list, fb, x.atom) == eval_ensemble(e, fb, x.atom));
  }
}

TEST_CASE("ecote edge cases") {
  gen::Rng rng(43);
  const auto vocab = gen::vocabulary(rng, 3, 4);
  Ensemble e = gen::ensemble(rng, vocab, 3, CombineMode::Sum);
  const FactBase fb = gen::fact_base(gen::facts(rng, vocab, 0.3));

  const EcoteResult none = ecote(prep(e), fb, ExampleSet{});
  REQUIRE(none.list.rules.size() == 1);
  CHECK(none.list.rules[0].body.empty());

  // Constant trees: everything collapses into one value.
  std::vector<TildeTree> constant_trees;
  for (const TildeTree& t : e.trees) {
    std::function<TildeTree::NodePtr(const TildeTree::Node&)> relabel = [&](const TildeTree::Node& n) {
      if (n.is_leaf()) return TildeTree::leaf(0.25);
      return TildeTree::inner(n.test, relabel(*n.yes), relabel(*n.no));
    };
    constant_trees.emplace_back(relabel(t.root()));
  }
  e.trees = constant_trees;
  const ExampleSet ex = gen::examples(rng, vocab, 10);
  const EcoteResult r = ecote(prep(e), fb, ex);
  for (const Atom& inst : oracle::instances(vocab.target, vocab.constants)) CHECK(predict(r.list, fb, inst) == 0.75);
}
