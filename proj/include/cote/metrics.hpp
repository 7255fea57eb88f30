#pragma once

// Ranking metrics and compression statistics.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cote/logic.hpp"
#include "cote/tree.hpp"

namespace cote {

/// Thrown when the labels do not contain both classes.
class DegenerateLabels : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mann-Whitney estimate of the area under the ROC curve; tied pairs count
/// one half.
double auc_roc(std::span<const double> scores, const std::vector<bool>& labels);

/// Area under the precision-recall step curve: the sum over distinct score
/// thresholds of recall increase times precision at that threshold.
double auc_pr(std::span<const double> scores, const std::vector<bool>& labels);

using BigInt = boost::multiprecision::cpp_int;

struct CompressionStats {
  BigInt rules_before;  // product of per-tree path counts
  std::size_t paths_total = 0;
  std::size_t max_depth = 0;
  std::size_t rules_after = 0;
  double avg_body_length = 0.0;
};

CompressionStats compression_stats(std::span<const TildeTree> trees, const DecisionList& output);

/// Mean body length over the rules; 0 for an empty list.
double average_body_length(const DecisionList& list);

/// Outcome of the post-compression self-check.
struct Faithfulness {
  enum class Kind { Exact, TrainExact, Violated, Unchecked } kind = Kind::Unchecked;
  std::size_t violations = 0;

  std::string to_string() const;
};

/// Summary of one compression run, written as `key=value` lines.
struct RunReport {
  std::string mode;
  std::string status = "ok";  // ok | aborted
  std::string aborted_phase;
  CompressionStats stats;
  double wall_seconds = 0.0;
  std::size_t budget_aborts = 0;
  std::size_t groups = 0;
  std::size_t merges_completed = 0;
  std::vector<std::size_t> rules_per_merge;
  Faithfulness faithfulness;

  std::string to_text() const;
};

}  // namespace cote
