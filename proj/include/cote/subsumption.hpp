#pragma once

// Theta-subsumption between positive atom sets, with head variables frozen.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cote/logic.hpp"

namespace cote {

/// Bound on one subsumption search.
class SearchBudget {
 public:
  static constexpr std::uint64_t kDefaultBacktracks = 1'000'000;
  static constexpr std::chrono::milliseconds kDefaultDeadline{5000};

  SearchBudget() = default;
  /// Throws std::invalid_argument unless both bounds are strictly positive.
  SearchBudget(std::uint64_t max_backtracks, std::chrono::milliseconds deadline);

  std::uint64_t max_backtracks() const { return max_backtracks_; }
  std::chrono::milliseconds deadline() const { return deadline_; }

 private:
  std::uint64_t max_backtracks_ = kDefaultBacktracks;
  std::chrono::milliseconds deadline_ = kDefaultDeadline;
};

/// An absolute wall-clock limit shared by a whole compression job.
class Deadline {
 public:
  using Clock = std::chrono::steady_clock;

  static Deadline never() { return Deadline(); }
  static Deadline after(std::chrono::duration<double> d) {
    Deadline out;
    out.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(d);
    return out;
  }

  bool expired() const { return at_ && Clock::now() >= *at_; }

 private:
  std::optional<Clock::time_point> at_;
};

enum class Subsumes : std::uint8_t { Yes, No, BudgetExceeded };

struct SubsumptionOutcome {
  Subsumes result = Subsumes::No;
  std::uint64_t backtracks = 0;
};

/// Decides whether some substitution over the non-frozen variables of
/// `general` maps every atom of it into `specific`. Non-frozen variables of
/// `specific` act as fresh constants; constants and frozen variables only
/// match themselves.
SubsumptionOutcome theta_subsumes(std::span<const Atom> general, std::span<const Atom> specific,
                                  const VariableSet& frozen, const SearchBudget& budget = {});

/// Greedy self-subsumption reduction: drops body atoms one at a time, in
/// body order, while the shorter body stays equivalent. Repeats until no atom
/// can be dropped. A removal test that runs out of budget keeps the atom.
Clause clause_reduction(const Clause& clause, const SearchBudget& budget = {});

/// Cached pairwise subsumption between distinct predicate groups.
/// `subsumes(i, j)` is true iff group i theta-subsumes group j.
class SubsumptionMatrix {
 public:
  struct CellRecord {
    std::size_t general = 0;
    std::size_t specific = 0;
    Subsumes result = Subsumes::No;
    std::uint64_t backtracks = 0;
  };

  SubsumptionMatrix() = default;

  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  std::optional<std::size_t> index_of(const std::string& key) const;
  /// Throws std::out_of_range for a key outside the matrix.
  std::size_t require_index(const std::string& key) const;

  bool subsumes(std::size_t general, std::size_t specific) const {
    return cells_[general * keys_.size() + specific] != 0;
  }

  /// Cells whose search ran out of budget; they are stored as false.
  std::size_t degraded_cells() const { return degraded_; }
  const std::vector<CellRecord>& records() const { return records_; }

  /// Writes `key_i,key_j,result,backtracks` rows.
  void write_diagnostics(std::ostream& out) const;

 private:
  friend SubsumptionMatrix build_sm(std::span<const PredicateGroup>, const VariableSet&,
                                    const SearchBudget&, const Deadline&);

  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::uint8_t> cells_;
  std::vector<CellRecord> records_;
  std::size_t degraded_ = 0;
};

/// Thrown when a job-wide deadline expires mid-phase.
class DeadlineExceeded : public std::runtime_error {
 public:
  explicit DeadlineExceeded(std::string phase)
      : std::runtime_error("time budget exceeded during " + phase), phase_(std::move(phase)) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

/// Fills all M x M cells. Groups with the same canonical key share a row.
/// Throws DeadlineExceeded if `deadline` expires before the matrix is done.
SubsumptionMatrix build_sm(std::span<const PredicateGroup> groups, const VariableSet& frozen,
                           const SearchBudget& budget = {}, const Deadline& deadline = Deadline::never());

}  // namespace cote
