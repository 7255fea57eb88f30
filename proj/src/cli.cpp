#include "cote/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>

#include "cote/compressor.hpp"
#include "cote/metrics.hpp"
#include "cote/model_io.hpp"

namespace cote::cli {

namespace {

struct CompressFlags {
  std::string model;
  std::string mode;
  std::string facts;
  std::string pos;
  std::string neg;
  std::string out;
  std::string report;
  std::string sm_dump;
  double budget_seconds = 0.0;
  bool exact_clause_subsumption = false;
  std::uint64_t max_backtracks = SearchBudget::kDefaultBacktracks;
  double call_seconds = static_cast<double>(SearchBudget::kDefaultDeadline.count()) / 1000.0;
  std::size_t fuzz = 200;
  std::uint64_t seed = 1;
};

struct EvalFlags {
  std::string list;
  std::string model;
  std::string facts;
  std::string pos;
  std::string neg;
  bool sigmoid = false;
  bool machine = false;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string load(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

// Head instances for the logical self-check: random tuples over every
// constant mentioned by the facts, the examples and the trees.
std::vector<Atom> fuzz_instances(const Ensemble& ensemble, const FactBase& facts, const ExampleSet& examples,
                                 std::size_t count, std::uint64_t seed) {
  std::set<std::string> constants(facts.constants().begin(), facts.constants().end());
  for (const Example& e : examples.examples) {
    for (const Term& t : e.atom.args) constants.insert(t.name);
  }
  std::vector<const TildeTree::Node*> stack;
  for (const TildeTree& t : ensemble.trees) stack.push_back(&t.root());
  while (!stack.empty()) {
    const TildeTree::Node* n = stack.back();
    stack.pop_back();
    for (const Atom& a : n->test) {
      for (const Term& t : a.args) {
        if (t.is_constant()) constants.insert(t.name);
      }
    }
    if (!n->is_leaf()) {
      stack.push_back(n->yes.get());
      stack.push_back(n->no.get());
    }
  }
  constants.insert("Fresh_constant");
  const std::vector<std::string> pool(constants.begin(), constants.end());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<Atom> out;
  for (std::size_t i = 0; i < count; ++i) {
    Atom a{ensemble.target.predicate, {}};
    for (std::size_t k = 0; k < ensemble.target.arity(); ++k) a.args.push_back(Term::constant(pool[pick(rng)]));
    out.push_back(std::move(a));
  }
  return out;
}

// Parses the file at `path`, naming it in any parse error.
template <typename Parse>
auto parse_file(const std::string& path, Parse&& parse) {
  const std::string text = load(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void report_warnings(const QueryWarnings& warnings, std::ostream& err) {
  for (const std::string& p : warnings.unknown_predicates) {
    err << "warning: predicate " << p << " has no facts; treated as an empty relation\n";
  }
}

int compress(const CompressFlags& f, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

  if (f.mode != "scote" && f.mode != "ecote") {
    err << "error: --mode must be scote or ecote\n";
    return kUsage;
  }
  const bool have_examples = !f.pos.empty() || !f.neg.empty();
  if (f.mode == "ecote" && (f.pos.empty() || f.neg.empty())) {
    err << "error: --mode ecote needs both --pos and --neg\n";
    return kUsage;
  }
  if (f.budget_seconds < 0.0 || f.call_seconds <= 0.0 || f.max_backtracks == 0) {
    err << "error: budgets must be positive\n";
    return kUsage;
  }

  Signature signature;
  const Ensemble ensemble = parse_file(f.model, [&](const std::string& t) { return parse_model(t, &signature); });
  const FactBase facts = parse_file(f.facts, [&](const std::string& t) { return parse_facts(t, &signature); });
  std::vector<std::string> example_warnings;
  ExampleSet examples;
  if (have_examples) {
    const std::string pos = f.pos.empty() ? std::string() : load(f.pos);
    const std::string neg = f.neg.empty() ? std::string() : load(f.neg);
    try {
      examples = parse_examples(pos, neg, &signature, &example_warnings);
    } catch (const ParseError& e) {
      throw InputError("examples: " + std::string(e.what()));
    }
  }
  for (const std::string& w : example_warnings) err << "warning: " << w << '\n';
  for (const Example& e : examples.examples) {
    if (e.atom.predicate != ensemble.target.predicate || e.atom.arity() != ensemble.target.arity()) {
      throw InputError("example " + to_string(e.atom) + " does not match target " + to_string(ensemble.target));
    }
  }

  const SearchBudget budget(
      f.max_backtracks,
      std::chrono::milliseconds(std::max<std::int64_t>(1, std::llround(f.call_seconds * 1000.0))));
  const Deadline deadline = f.budget_seconds > 0.0 ? Deadline::after(std::chrono::duration<double>(f.budget_seconds))
                                                   : Deadline::never();

  RunReport report;
  report.mode = f.mode;
  auto write_report = [&] {
    report.wall_seconds = elapsed();
    if (!f.report.empty()) write_text_file(f.report, report.to_text());
  };

  const Prepared prepared = prep(ensemble, budget);
  report.groups = prepared.groups.size();

  DecisionList list;
  if (f.mode == "scote") {
    ScoteOptions options;
    options.budget = budget;
    options.deadline = deadline;
    options.exact_clause_subsumption = f.exact_clause_subsumption;
    try {
      ScoteResult result = scote(prepared, options);
      report.budget_aborts = result.sm.degraded_cells();
      report.rules_per_merge = result.rules_per_merge;
      report.merges_completed = result.rules_per_merge.size();
      if (!f.sm_dump.empty()) {
        std::ofstream dump(f.sm_dump);
        if (!dump) throw InputError("cannot write " + f.sm_dump);
        result.sm.write_diagnostics(dump);
      }
      list = std::move(result.list);
    } catch (const CompressionAborted& e) {
      report.status = "aborted";
      report.aborted_phase = e.phase();
      report.merges_completed = e.merges_completed();
      report.rules_per_merge = e.rules_per_merge();
      report.stats = compression_stats(ensemble.trees, DecisionList{});
      report.stats.rules_after = e.rules_in_progress();
      write_report();
      err << "error: " << e.what() << " (" << e.rules_in_progress() << " rules in progress)\n";
      return kBudgetAbort;
    }
  } else {
    EcoteResult result = ecote(prepared, facts, examples);
    report_warnings(result.warnings, err);
    report.rules_per_merge = result.rules_per_merge;
    report.merges_completed = result.rules_per_merge.size();
    list = std::move(result.list);
  }
  report.stats = compression_stats(ensemble.trees, list);

  // Self-check against the ensemble itself.
  const ListPredictor predict_list(list, facts);
  const EnsembleEvaluator predict_ensemble(ensemble, facts);
  std::size_t violations = 0;
  for (const Example& e : examples.examples) {
    if (predict_list(e.atom) != predict_ensemble(e.atom)) ++violations;
  }
  if (f.mode == "scote") {
    for (const Atom& a : fuzz_instances(ensemble, facts, examples, f.fuzz, f.seed)) {
      if (predict_list(a) != predict_ensemble(a)) ++violations;
    }
  }
  if (violations > 0) {
    report.faithfulness = {Faithfulness::Kind::Violated, violations};
  } else {
    report.faithfulness.kind = f.mode == "scote" ? Faithfulness::Kind::Exact : Faithfulness::Kind::TrainExact;
  }

  write_text_file(f.out, write_list(list));
  write_report();

  char avg[32];
  std::snprintf(avg, sizeof avg, "%.4f", report.stats.avg_body_length);
  out << f.mode << ": " << report.stats.rules_before << " naive rules -> " << report.stats.rules_after
      << " rules, average body length " << avg << ", faithfulness " << report.faithfulness.to_string() << '\n';
  if (violations > 0) {
    err << "error: compressed list disagrees with the ensemble on " << violations << " instance(s)\n";
    return kFaithfulnessViolation;
  }
  return kOk;
}

int eval(const EvalFlags& f, std::ostream& out, std::ostream& err) {
  if (f.list.empty() == f.model.empty()) {
    err << "error: give exactly one of --list or --model\n";
    return kUsage;
  }
  Signature signature;
  std::optional<DecisionList> list;
  std::optional<Ensemble> ensemble;
  if (!f.list.empty()) {
    list = parse_file(f.list, [](const std::string& t) { return parse_list(t); });
  } else {
    ensemble = parse_file(f.model, [&](const std::string& t) { return parse_model(t, &signature); });
  }
  const FactBase facts = parse_file(f.facts, [&](const std::string& t) { return parse_facts(t, &signature); });
  ExampleSet examples;
  try {
    examples = parse_examples(load(f.pos), load(f.neg), &signature);
  } catch (const ParseError& e) {
    throw InputError("examples: " + std::string(e.what()));
  }

  std::vector<double> scores;
  std::vector<bool> labels_vec;
  if (list) {
    const ListPredictor p(*list, facts);
    for (const Example& e : examples.examples) scores.push_back(p(e.atom));
  } else {
    const EnsembleEvaluator p(*ensemble, facts);
    for (const Example& e : examples.examples) scores.push_back(p(e.atom));
  }
  if (f.sigmoid) {
    for (double& s : scores) s = 1.0 / (1.0 + std::exp(-s));
  }
  for (const Example& e : examples.examples) labels_vec.push_back(e.positive);
  const double roc = auc_roc(scores, labels_vec);
  const double pr = auc_pr(scores, labels_vec);
  std::size_t rules = 0;
  double avg_len = 0.0;
  if (list) {
    rules = list->rules.size();
    avg_len = average_body_length(*list);
  } else {
    const CompressionStats s = compression_stats(ensemble->trees, DecisionList{});
    rules = s.paths_total;
  }

  char line[128];
  out << "metric             value\n";
  std::snprintf(line, sizeof line, "%-18s %.6f\n", "auc_roc", roc);
  out << line;
  std::snprintf(line, sizeof line, "%-18s %.6f\n", "auc_pr", pr);
  out << line;
  std::snprintf(line, sizeof line, "%-18s %zu\n", list ? "rules" : "paths", rules);
  out << line;
  if (list) {
    std::snprintf(line, sizeof line, "%-18s %.4f\n", "avg_body_length", avg_len);
    out << line;
  }
  if (f.machine) {
    out << "auc_roc,auc_pr," << (list ? "rules" : "paths") << ",avg_body_length\n";
    out << format_value(roc) << ',' << format_value(pr) << ',' << rules << ',' << format_value(avg_len) << '\n';
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compresses ensembles of first-order regression trees into decision lists", "cote"};
  app.require_subcommand(1);

  CompressFlags cf;
  CLI::App* compress_cmd = app.add_subcommand("compress", "Compress a tree ensemble into one decision list");
  compress_cmd->add_option("--model", cf.model, "Tree ensemble model file")->required();
  compress_cmd->add_option("--mode", cf.mode, "scote (logical equivalence) or ecote (training-set equivalence)")
      ->required();
  compress_cmd->add_option("--facts", cf.facts, "Background facts")->required();
  compress_cmd->add_option("--pos", cf.pos, "Positive training examples");
  compress_cmd->add_option("--neg", cf.neg, "Negative training examples");
  compress_cmd->add_option("--out", cf.out, "Output decision list")->required();
  compress_cmd->add_option("--report", cf.report, "Write a key=value run report");
  compress_cmd->add_option("--budget-seconds", cf.budget_seconds, "Wall-clock budget for scote (0: none)");
  compress_cmd->add_flag("--exact-clause-subsumption", cf.exact_clause_subsumption,
                         "Fall back to whole-rule subsumption when removing rules");
  compress_cmd->add_option("--max-backtracks", cf.max_backtracks, "Backtracks allowed per subsumption test");
  compress_cmd->add_option("--call-seconds", cf.call_seconds, "Seconds allowed per subsumption test");
  compress_cmd->add_option("--sm-dump", cf.sm_dump, "Write the subsumption matrix as CSV");
  compress_cmd->add_option("--fuzz", cf.fuzz, "Random instances in the scote self-check");
  compress_cmd->add_option("--seed", cf.seed, "Seed for the self-check instances");

  EvalFlags ef;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a decision list or an ensemble on labeled examples");
  eval_cmd->add_option("--list", ef.list, "Decision list");
  eval_cmd->add_option("--model", ef.model, "Tree ensemble model file");
  eval_cmd->add_option("--facts", ef.facts, "Background facts")->required();
  eval_cmd->add_option("--pos", ef.pos, "Positive examples")->required();
  eval_cmd->add_option("--neg", ef.neg, "Negative examples")->required();
  eval_cmd->add_flag("--sigmoid", ef.sigmoid, "Map scores through the logistic function");
  eval_cmd->add_flag("--machine", ef.machine, "Also print a CSV row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*compress_cmd) return compress(cf, out, err);
    return eval(ef, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DegenerateLabels& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace cote::cli
