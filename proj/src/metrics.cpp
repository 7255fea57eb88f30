#include "cote/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace cote {

namespace {

void check_inputs(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (pos == 0 || pos == labels.size()) {
    throw DegenerateLabels("ranking metrics need at least one positive and one negative example");
  }
}

// Indices sorted by descending score; ties are handled by callers in blocks.
std::vector<std::size_t> by_descending_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double auc_roc(std::span<const double> scores, const std::vector<bool>& labels) {
  check_inputs(scores, labels);
  const auto order = by_descending_score(scores);
  double negatives_above = 0.0;
  double discordant = 0.0;
  double pos_total = 0.0;
  double neg_total = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double pos = 0.0;
    double neg = 0.0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg) += 1.0;
      ++j;
    }
    // Positives in the block lose to every negative above it and tie with the
    // negatives inside it.
    discordant += pos * negatives_above + 0.5 * pos * neg;
    negatives_above += neg;
    pos_total += pos;
    neg_total += neg;
    i = j;
  }
  return 1.0 - discordant / (pos_total * neg_total);
}

double auc_pr(std::span<const double> scores, const std::vector<bool>& labels) {
  check_inputs(scores, labels);
  const auto order = by_descending_score(scores);
  const auto pos_total = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  double tp = 0.0;
  double seen = 0.0;
  double prev_recall = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) tp += 1.0;
      seen += 1.0;
      ++j;
    }
    const double recall = tp / pos_total;
    area += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return area;
}

double average_body_length(const DecisionList& list) {
  if (list.rules.empty()) return 0.0;
  std::size_t atoms = 0;
  for (const Clause& r : list.rules) atoms += r.body.size();
  return static_cast<double>(atoms) / static_cast<double>(list.rules.size());
}

CompressionStats compression_stats(std::span<const TildeTree> trees, const DecisionList& output) {
  CompressionStats s;
  s.rules_before = trees.empty() ? 0 : 1;
  for (const TildeTree& t : trees) {
    s.rules_before *= t.leaf_count();
    s.paths_total += t.leaf_count();
    s.max_depth = std::max(s.max_depth, t.depth());
  }
  s.rules_after = output.rules.size();
  s.avg_body_length = average_body_length(output);
  return s;
}

std::string Faithfulness::to_string() const {
  switch (kind) {
    case Kind::Exact:
      return "exact";
    case Kind::TrainExact:
      return "trainExact";
    case Kind::Violated:
      return "violated(" + std::to_string(violations) + ")";
    case Kind::Unchecked:
      return "unchecked";
  }
  return "unchecked";
}

std::string RunReport::to_text() const {
  char avg[32];
  std::snprintf(avg, sizeof avg, "%.4f", stats.avg_body_length);
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", wall_seconds);
  std::ostringstream out;
  out << "mode=" << mode << '\n';
  out << "status=" << status << '\n';
  if (!aborted_phase.empty()) out << "aborted_phase=" << aborted_phase << '\n';
  out << "rules_before=" << stats.rules_before << '\n';
  out << "rules_after=" << stats.rules_after << '\n';
  out << "avg_body_length=" << avg << '\n';
  out << "paths_total=" << stats.paths_total << '\n';
  out << "max_depth=" << stats.max_depth << '\n';
  out << "predicate_groups=" << groups << '\n';
  out << "merges_completed=" << merges_completed << '\n';
  out << "rules_per_merge=";
  for (std::size_t i = 0; i < rules_per_merge.size(); ++i) out << (i ? "," : "") << rules_per_merge[i];
  out << '\n';
  out << "budget_aborts=" << budget_aborts << '\n';
  out << "wall_time_s=" << wall << '\n';
  out << "faithfulness=" << faithfulness.to_string() << '\n';
  return out.str();
}

}  // namespace cote
