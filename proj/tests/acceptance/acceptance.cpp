// One line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "cote/cli.hpp"
#include "cote/compressor.hpp"
#include "cote/metrics.hpp"
#include "cote/model_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "random_models.hpp"
#include "synthetic_task.hpp"

using namespace cote;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::vector<std::string> lines_of(std::span<const Clause> rules) {
  std::vector<std::string> out;
  for (const Clause& r : rules) out.push_back(format_value(r.value) + ": " + rule_text(r));
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

bool has_provenance(std::span<const Clause> rules, std::vector<LeafRef> p) {
  for (const Clause& r : rules) {
    if (r.provenance == p) return true;
  }
  return false;
}

std::vector<Atom> instances_with_fresh(const gen::Vocabulary& v) {
  auto constants = v.constants;
  constants.push_back("Fresh");
  return oracle::instances(v.target, constants);
}

// Random ensemble family shared by criteria 2, 3 and 6.
struct Family {
  gen::Vocabulary vocab;
  Ensemble ensemble;
};

Family family(gen::Rng& rng, std::size_t min_trees, std::size_t max_trees, std::size_t constants) {
  Family f;
  const std::size_t preds = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  f.vocab = gen::vocabulary(rng, preds, constants);
  const std::size_t trees = std::uniform_int_distribution<std::size_t>(min_trees, max_trees)(rng);
  const CombineMode mode = std::bernoulli_distribution(0.5)(rng) ? CombineMode::Sum : CombineMode::Average;
  f.ensemble = gen::ensemble(rng, f.vocab, trees, mode);
  return f;
}

Outcome worked_example() {
  Outcome o;
  const Ensemble e = parse_model(fixtures::text("advisor/advisor.model"));
  o.require(lines_of(tree_to_list(e.trees[0], e.target).rules) == fixture_lines("advisor/tree0_list.txt"),
            "tree 0 list differs from the fixture");
  const Prepared p = prep(e);
  const auto order = merge_order(p.lists[0], p.lists[1]);
  const DecisionList merged = merge_lists(p.lists[0], p.lists[1], order);
  o.require(lines_of(merged.rules) == fixture_lines("advisor/merged.txt"), "cross product differs from the fixture");
  const SubsumptionMatrix sm = build_sm(p.groups, variables_of(p.target));
  std::vector<Clause> reduced;
  for (const Clause& c : merged.rules) reduced.push_back(reduce_clause(c, sm));
  o.require(lines_of(std::span(&reduced[2], 1)) == fixture_lines("advisor/w1_w8_reduced.txt"), "(w1+w8) keeps its tree-1 group");
  const std::vector<Clause> list = reduce_list(reduced, sm);
  o.require(!has_provenance(list, {{0, 0}, {1, 3}}) && !has_provenance(list, {{0, 0}, {1, 4}}),
            "(w1+w9) or (w1+w10) survived list reduction");
  o.require(list.size() >= 3 && lines_of(std::span(list.data(), 3)) == fixture_lines("advisor/reduced_head.txt"),
            "reduced list does not start with the displayed w1 rules");
  if (o.pass) o.detail = "5 + 25 rules match; (w1+w8) reduced; " + std::to_string(list.size()) + " rules after reduction";
  return o;
}

Outcome scote_equivalence() {
  Outcome o;
  gen::Rng rng(1001);
  std::size_t instances = 0;
  std::size_t oracle_checked = 0;
  for (int round = 0; round < 200 && o.pass; ++round) {
    const Family f = family(rng, 2, 4, std::uniform_int_distribution<std::size_t>(2, 5)(rng));
    const auto facts = gen::facts(rng, f.vocab, 0.35);
    const FactBase fb = gen::fact_base(facts);
    const DecisionList list = scote(prep(f.ensemble)).list;
    const ListPredictor predict_list(list, fb);
    const EnsembleEvaluator truth(f.ensemble, fb);
    for (const Atom& inst : instances_with_fresh(f.vocab)) {
      const double expected = truth(inst);
      ++instances;
      if (predict_list(inst) != expected) {
        o.require(false, "ensemble " + std::to_string(round) + " differs on " + to_string(inst));
        break;
      }
      if (round < 20) {
        ++oracle_checked;
        o.require(oracle::ensemble_value(f.ensemble, facts, inst) == expected,
                  "evaluator disagrees with the path-formula oracle on " + to_string(inst));
      }
    }
  }
  if (o.pass) {
    o.detail = "200 ensembles, " + std::to_string(instances) + " instances bit-exact (" +
               std::to_string(oracle_checked) + " also against the path-formula oracle)";
  }
  return o;
}

Outcome ecote_faithfulness() {
  Outcome o;
  gen::Rng rng(2002);
  std::size_t examples_checked = 0;
  std::size_t max_ratio_num = 0;
  for (int round = 0; round < 200 && o.pass; ++round) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(10, 50)(rng);
    // Enough constants for n distinct target pairs.
    const std::size_t constants = n <= 25 ? 5 : 8;
    const Family f = family(rng, 2, 4, constants);
    const FactBase fb = gen::fact_base(gen::facts(rng, f.vocab, 0.3));
    const ExampleSet ex = gen::examples(rng, f.vocab, n);
    const EcoteResult r = ecote(prep(f.ensemble), fb, ex);
    for (const std::size_t rules : r.rules_per_merge) {
      o.require(rules - 1 <= ex.size(), "more non-final rules than examples");
      max_ratio_num = std::max(max_ratio_num, rules - 1);
    }
    o.require(r.list.rules.back().body.empty(), "list does not end with a catch-all");
    const ListPredictor predict_list(r.list, fb);
    const EnsembleEvaluator truth(f.ensemble, fb);
    for (const Example& x : ex.examples) {
      ++examples_checked;
      o.require(predict_list(x.atom) == truth(x.atom), "round " + std::to_string(round) + " differs on " + to_string(x.atom));
    }
  }
  if (o.pass) {
    o.detail = "200 ensembles, " + std::to_string(examples_checked) +
               " training examples exact; largest non-final rule count " + std::to_string(max_ratio_num);
  }
  return o;
}

Outcome subsumption_oracle() {
  Outcome o;
  gen::Rng rng(3003);
  const VariableSet head = {"a", "b"};
  std::size_t positives = 0;
  for (int i = 0; i < 1000 && o.pass; ++i) {
    const auto vocab = gen::vocabulary(rng, 2, 2);
    const auto g = gen::body(rng, vocab, 4, 3);
    const auto s = gen::body(rng, vocab, 4, 3);
    const bool expected = oracle::subsumes(g, s, head);
    positives += expected ? 1 : 0;
    const auto got = theta_subsumes(g, s, head);
    o.require(got.result == (expected ? Subsumes::Yes : Subsumes::No),
              "pair " + std::to_string(i) + ": " + to_string(g) + " vs " + to_string(s));
  }
  // Reflexivity and transitivity of a matrix over random groups.
  const auto vocab = gen::vocabulary(rng, 2, 2);
  std::vector<PredicateGroup> groups;
  for (int i = 0; i < 60; ++i) {
    for (auto& grp : literal_groups(Clause{vocab.target, gen::body(rng, vocab, 3, 2), 0.0, {}})) groups.push_back(grp);
  }
  const SubsumptionMatrix sm = build_sm(groups, head);
  std::size_t triples = 0;
  for (std::size_t i = 0; i < sm.size(); ++i) {
    o.require(sm.subsumes(i, i), "matrix is not reflexive");
    for (std::size_t j = 0; j < sm.size(); ++j) {
      for (std::size_t k = 0; k < sm.size(); ++k) {
        if (sm.subsumes(i, j) && sm.subsumes(j, k)) {
          ++triples;
          o.require(sm.subsumes(i, k), "matrix is not transitive");
        }
      }
    }
  }
  if (o.pass) {
    o.detail = "1000 pairs match enumeration (" + std::to_string(positives) + " subsuming); " +
               std::to_string(sm.size()) + "x" + std::to_string(sm.size()) + " matrix, " + std::to_string(triples) +
               " transitive triples";
  }
  return o;
}

Outcome group_decomposition() {
  Outcome o;
  gen::Rng rng(4004);
  std::size_t multi_group = 0;
  std::size_t checks = 0;
  for (int i = 0; i < 500 && o.pass; ++i) {
    const auto vocab = gen::vocabulary(rng, 3, 4);
    const auto facts = gen::facts(rng, vocab, 0.35);
    const FactBase fb = gen::fact_base(facts);
    ExampleSet ex;
    for (const Atom& inst : instances_with_fresh(vocab)) ex.examples.push_back({inst, true});
    const Clause c{vocab.target, gen::body(rng, vocab, 4, 3), 0.0, {}};
    const auto groups = literal_groups(c);
    multi_group += groups.size() > 1 ? 1 : 0;
    CoverageCache cache(fb, ex, vocab.target);
    const CoverageSet via_groups = clause_coverage(groups, cache);
    for (std::size_t e = 0; e < ex.size(); ++e) {
      ++checks;
      o.require(via_groups.test(e) == satisfies(fb, bind_head(vocab.target, ex.examples[e].atom), c.body),
                "clause " + to_string(c.body) + " on " + to_string(ex.examples[e].atom));
    }
  }
  if (o.pass) {
    o.detail = "500 clauses (" + std::to_string(multi_group) + " with several groups), " + std::to_string(checks) +
               " example checks";
  }
  return o;
}

Outcome merge_orders() {
  Outcome o;
  gen::Rng rng(5005);
  std::size_t comparisons = 0;
  for (int round = 0; round < 50 && o.pass; ++round) {
    const Family f = family(rng, 2, 2, 4);
    const auto facts = gen::facts(rng, f.vocab, 0.35);
    const FactBase fb = gen::fact_base(facts);
    const Prepared p = prep(f.ensemble);
    const DecisionList base = merge_lists(p.lists[0], p.lists[1], merge_order(p.lists[0], p.lists[1]));
    const auto insts = instances_with_fresh(f.vocab);
    std::vector<double> expected;
    for (const Atom& inst : insts) expected.push_back(eval_ensemble(f.ensemble, fb, inst));
    for (int k = 0; k < 10; ++k) {
      const auto order = gen::admissible_order(rng, p.lists[0].rules.size(), p.lists[1].rules.size());
      const DecisionList alt = merge_lists(p.lists[0], p.lists[1], order);
      const ListPredictor pa(alt, fb);
      const ListPredictor pb(base, fb);
      for (std::size_t i = 0; i < insts.size(); ++i) {
        ++comparisons;
        o.require(pa(insts[i]) == pb(insts[i]) && pa(insts[i]) == expected[i],
                  "merge " + std::to_string(round) + " order " + std::to_string(k) + " on " + to_string(insts[i]));
      }
    }
  }
  if (o.pass) o.detail = "50 merges x 10 orders, " + std::to_string(comparisons) + " predictions identical";
  return o;
}

Outcome pruning_narratives() {
  Outcome o;
  const Ensemble e = parse_model(fixtures::text("advisor/advisor.model"));
  const Prepared p = prep(e);
  {
    const FactBase fb = parse_facts(fixtures::text("narratives/professors_publish.facts"));
    const ExampleSet ex = parse_examples(fixtures::text("narratives/professors_publish.pos"),
                                         fixtures::text("narratives/professors_publish.neg"));
    CoverageCache cache(fb, ex, p.target);
    const Clause w2_w9 = add_clauses(p.lists[0].rules[1], p.lists[1].rules[3]);
    o.require(cache.clause(w2_w9).any(), "(w2+w9) covers nothing");
    const Clause pruned = prune_clause(w2_w9, cache);
    o.require(rule_text(pruned) == "AdvisedBy(a,b) :- Professor(b), Publication(c_t0,a).",
              "(w2+w9) pruned to " + rule_text(pruned));
  }
  {
    const FactBase fb = parse_facts(fixtures::text("narratives/coauthors_assist.facts"));
    const ExampleSet ex = parse_examples(fixtures::text("narratives/coauthors_assist.pos"),
                                         fixtures::text("narratives/coauthors_assist.neg"));
    CoverageCache cache(fb, ex, p.target);
    const Clause w1_w6 = add_clauses(p.lists[0].rules[0], p.lists[1].rules[0]);
    const Clause w1_w7 = add_clauses(p.lists[0].rules[0], p.lists[1].rules[1]);
    o.require(cache.clause(w1_w7).any(), "(w1+w7) covers nothing by itself");
    o.require(check_coverage(w1_w7, cache, cache.clause(w1_w6)).none(), "(w1+w7) keeps active coverage");
    const EcoteResult r = ecote(p, fb, ex);
    o.require(has_provenance(r.list.rules, {{0, 0}, {1, 0}}), "(w1+w6) missing from the ecote list");
    o.require(!has_provenance(r.list.rules, {{0, 0}, {1, 1}}), "(w1+w7) kept by ecote");
    const EnsembleEvaluator truth(e, fb);
    for (const Example& x : ex.examples) o.require(predict(r.list, fb, x.atom) == truth(x.atom), "narrative list unfaithful");
  }
  if (o.pass) o.detail = "Publication(e,b) pruned from (w2+w9); (w1+w7) dropped for empty coverage";
  return o;
}

Outcome ranking_metrics() {
  Outcome o;
  const std::vector<bool> y = {true, true, false, false};
  o.require(auc_roc(std::vector<double>{4, 3, 2, 1}, y) == 1.0, "perfect ranking");
  o.require(auc_roc(std::vector<double>{1, 2, 3, 4}, y) == 0.0, "reversed ranking");
  o.require(auc_roc(std::vector<double>{7, 7, 7, 7}, y) == 0.5, "constant ranking");
  std::mt19937_64 rng(8008);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    std::vector<double> s;
    std::vector<bool> labels;
    for (std::size_t k = 0; k < n; ++k) {
      // Coarse scores so that ties are common.
      s.push_back(std::round(std::normal_distribution<double>(0.0, 2.0)(rng) * 2.0) / 2.0);
      labels.push_back(k == 0 || (k != 1 && std::bernoulli_distribution(0.4)(rng)));
    }
    double good = 0.0;
    double pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!labels[a] || labels[b]) continue;
        pairs += 1.0;
        good += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
      }
    }
    worst = std::max(worst, std::abs(auc_roc(s, labels) - good / pairs));
  }
  o.require(worst <= 1e-12, "pairwise oracle deviation " + std::to_string(worst));
  if (o.pass) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "100 random sets, max deviation %.3g; 1.0/0.0/0.5 reference rankings", worst);
    o.detail = buf;
  }
  return o;
}

Outcome compression_trend() {
  Outcome o;
  const synth::Task task = synth::university(9009, 200);
  const Ensemble full = synth::boost(task, {10, 3, 3});
  std::vector<std::size_t> counts;
  std::string series;
  for (std::size_t k = 2; k <= 10; ++k) {
    Ensemble e = full;
    e.trees.erase(e.trees.begin() + static_cast<std::ptrdiff_t>(k), e.trees.end());
    const EcoteResult r = ecote(prep(e), task.facts, task.examples);
    counts.push_back(r.list.rules.size());
    series += (series.empty() ? "" : ",") + std::to_string(r.list.rules.size());
    o.require(r.list.rules.size() <= task.examples.size() + 1, "rule count above |examples| + 1");
    const EnsembleEvaluator truth(e, task.facts);
    for (const Example& x : task.examples.examples) {
      o.require(predict(r.list, task.facts, x.atom) == truth(x.atom), "trend list unfaithful");
    }
  }
  const double per_tree_2 = static_cast<double>(counts.front()) / 2.0;
  const double per_tree_10 = static_cast<double>(counts.back()) / 10.0;
  o.require(per_tree_10 < per_tree_2, "rules per tree did not fall from 2 to 10 trees");
  o.detail = "rules for 2..10 trees: " + series + " (|examples| = 200)";
  return o;
}

Outcome budget_abort() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("cote-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  // ICML-like: twenty trees, each testing word constants of its own, so no
  // group subsumes another and the cross product is 7^20.
  std::string model = "target CoAuthor(a, b)\ncombine sum\n";
  std::string facts;
  for (int t = 0; t < 20; ++t) {
    model += "tree\n";
    for (int k = 0; k < 6; ++k) {
      const std::string word = "\"w" + std::to_string(t) + "_" + std::to_string(k) + "\"";
      model += "node Title(x, " + word + "), Wrote(a, x), Wrote(b, x)\nyes leaf 0." + std::to_string(k + 1) + "\nno ";
      facts += "Title(P" + std::to_string(t) + ", " + word + ").\n";
    }
    model += "leaf -0.5\n";
  }
  write_text_file((dir / "icml.model").string(), model);
  write_text_file((dir / "facts").string(), facts + "Wrote(Ann, P0).\n");
  const std::vector<std::string> args = {"cote", "compress", "--model", (dir / "icml.model").string(), "--mode", "scote",
                                         "--facts", (dir / "facts").string(), "--out", (dir / "out.list").string(),
                                         "--report", (dir / "report").string(), "--budget-seconds", "3"};
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const auto start = Clock::now();
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  o.require(code == cli::kBudgetAbort, "exit code " + std::to_string(code));
  o.require(seconds < 30.0, "abort took " + std::to_string(seconds) + " s");
  std::string report;
  if (fs::exists(dir / "report")) report = read_text_file((dir / "report").string());
  o.require(report.find("status=aborted\n") != std::string::npos, "no partial report");
  fs::remove_all(dir);
  if (o.pass) {
    std::string phase = report.substr(report.find("aborted_phase=") + 14);
    phase = phase.substr(0, phase.find('\n'));
    char buf[128];
    std::snprintf(buf, sizeof buf, "exit 3 after %.2f s, aborted in %s with a partial report", seconds, phase.c_str());
    o.detail = buf;
  }
  return o;
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "advisor worked example", 1.0, worked_example},
      {2, "scote logical equivalence", 120.0, scote_equivalence},
      {3, "ecote faithfulness and size bound", 120.0, ecote_faithfulness},
      {4, "theta-subsumption against enumeration", 60.0, subsumption_oracle},
      {5, "predicate-group decomposition", 60.0, group_decomposition},
      {6, "merge-order independence", 60.0, merge_orders},
      {7, "ecote pruning narratives", 60.0, pruning_narratives},
      {8, "ranking metrics", 60.0, ranking_metrics},
      {9, "ecote compression trend", 300.0, compression_trend},
      {10, "budget abort", 60.0, budget_abort},
  };
  bool all = true;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (o.pass && seconds > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + std::to_string(static_cast<int>(c.limit_seconds)) + " s limit";
    }
    all = all && o.pass;
    std::printf("criterion %2d [PRIMARY] %-46s %s  %.2fs  %s\n", c.number, c.name, o.pass ? "PASS" : "FAIL", seconds,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
