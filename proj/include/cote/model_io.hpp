#pragma once

// Text formats: tree models, fact bases, example sets and decision lists.
//
// Token classes: an identifier starting with a lowercase letter or '_' is a
// variable; one starting with an uppercase letter or a digit is a constant;
// a double-quoted string is a constant. Whatever precedes '(' is a predicate.
// '%' starts a comment that runs to the end of the line.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cote/coverage.hpp"
#include "cote/logic.hpp"
#include "cote/tree.hpp"

namespace cote {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Predicate arities seen so far in a run. Share one instance across the
/// model, fact and example files of a job.
class Signature {
 public:
  /// Throws ParseError when `atom` disagrees with an earlier arity.
  void check(const Atom& atom, std::size_t line, std::size_t column);

 private:
  std::map<std::string, std::size_t> arity_;
};

/// Parses a single atom. Rejects negation and function symbols.
Atom parse_atom(std::string_view text, std::size_t line = 1);

/// Model file:
///
///     target AdvisedBy(a,b)
///     combine sum
///     tree
///     node Professor(b)
///       yes leaf 0.5
///       no leaf -0.25
///
/// A `node` line is followed by its yes child and then its no child, each
/// introduced by its label. Indentation is ignored.
Ensemble parse_model(std::string_view text, Signature* signature = nullptr);
std::string write_model(const Ensemble& ensemble);

/// One ground atom per line, optional trailing '.'.
FactBase parse_facts(std::string_view text, Signature* signature = nullptr);
std::string write_facts(const FactBase& facts);

/// Positive examples first, then negatives. A repeated example within one
/// file is dropped with a warning; an atom labeled both ways is an error.
ExampleSet parse_examples(std::string_view positive, std::string_view negative, Signature* signature = nullptr,
                          std::vector<std::string>* warnings = nullptr);
std::string write_examples(const ExampleSet& examples, bool positive);

/// `<value>: <Head> :- <atom>, ..., <atom>.` per rule, after `% key: value`
/// header lines; an empty body prints as `<value>: <Head> :- .`. Values use
/// 17 significant digits. Input atoms may also be separated by '∧'.
std::string write_list(const DecisionList& list);
DecisionList parse_list(std::string_view text);

/// 17-significant-digit rendering of a double.
std::string format_value(double value);

/// Throws std::runtime_error when the file cannot be read.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace cote
