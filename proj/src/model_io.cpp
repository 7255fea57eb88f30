#include "cote/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace cote {

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

void Signature::check(const Atom& atom, std::size_t line, std::size_t column) {
  auto [it, fresh] = arity_.emplace(atom.predicate, atom.arity());
  if (!fresh && it->second != atom.arity()) {
    throw ParseError("predicate " + atom.predicate + " has arity " + std::to_string(it->second) +
                         " elsewhere but " + std::to_string(atom.arity()) + " here",
                     line, column);
  }
}

namespace {

constexpr std::string_view kAnd = "\xE2\x88\xA7";  // U+2227 LOGICAL AND
constexpr std::string_view kNot = "\xC2\xAC";       // U+00AC NOT SIGN

bool is_ident_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// A position in one line of input.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line, std::size_t first_column = 1)
      : text_(text), line_(line), first_column_(first_column) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  bool starts_with(std::string_view token) {
    skip_ws();
    return text_.substr(pos_).starts_with(token);
  }
  bool consume(std::string_view token) {
    if (!starts_with(token)) return false;
    pos_ += token.size();
    return true;
  }
  void expect(std::string_view token) {
    if (!consume(token)) fail("expected '" + std::string(token) + "'");
  }
  void expect_end() {
    if (!at_end()) fail("unexpected '" + std::string(text_.substr(pos_)) + "'");
  }

  std::string identifier(std::string_view what) {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected " + std::string(what));
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string quoted() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected '\"'");
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out += text_[pos_++];
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view until(char stop) {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != stop) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  double number() {
    skip_ws();
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    if (begin != end && *begin == '+') ++begin;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  std::size_t column() const { return first_column_ + pos_; }
  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, column()); }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t first_column_;
  std::size_t pos_ = 0;
};

Term parse_term(Cursor& c) {
  if (c.starts_with("\"")) return Term::constant(c.quoted());
  const std::string name = c.identifier("a variable or constant");
  if (c.starts_with("(")) c.fail("function symbols are not supported ('" + name + "(...)')");
  const char c0 = name.front();
  if ((c0 >= 'a' && c0 <= 'z') || c0 == '_') return Term::variable(name);
  return Term::constant(name);
}

Atom parse_atom_at(Cursor& c) {
  if (c.starts_with("\\+") || c.starts_with(kNot) || c.starts_with("~")) c.fail("negated literals are not supported");
  Atom atom;
  atom.predicate = c.identifier("a predicate name");
  if (atom.predicate == "not" && c.starts_with("(")) c.fail("negated literals are not supported");
  if (!c.consume("(")) return atom;
  if (c.consume(")")) return atom;
  do {
    atom.args.push_back(parse_term(c));
  } while (c.consume(","));
  c.expect(")");
  return atom;
}

std::vector<Atom> parse_conjunction(Cursor& c, Signature* signature) {
  std::vector<Atom> atoms;
  do {
    const std::size_t column = (c.skip_ws(), c.column());
    atoms.push_back(parse_atom_at(c));
    if (signature) signature->check(atoms.back(), c.line(), column);
  } while (c.consume(",") || c.consume(kAnd));
  return atoms;
}

struct Line {
  std::size_t number = 0;
  std::size_t column = 1;  // of the first character of `code`
  std::string_view code;
  std::string_view comment;  // text after '%', without it
};

// Splits into lines, drops blank and comment-only lines unless asked, and
// separates '%' comments outside quoted strings.
std::vector<Line> split_lines(std::string_view text, bool keep_comment_lines = false) {
  std::vector<Line> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++number;
    Line line;
    line.number = number;
    bool in_string = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"' && (i == 0 || raw[i - 1] != '\\')) in_string = !in_string;
      if (raw[i] == '%' && !in_string) {
        cut = i;
        break;
      }
    }
    if (cut < raw.size()) line.comment = raw.substr(cut + 1);
    std::string_view code = raw.substr(0, cut);
    std::size_t lead = 0;
    while (lead < code.size() && (code[lead] == ' ' || code[lead] == '\t')) ++lead;
    std::size_t trail = code.size();
    while (trail > lead && (code[trail - 1] == ' ' || code[trail - 1] == '\t' || code[trail - 1] == '\r')) --trail;
    line.code = code.substr(lead, trail - lead);
    line.column = lead + 1;
    if (!line.code.empty() || (keep_comment_lines && cut < raw.size())) out.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Parses a ground atom line with an optional trailing '.'.
Atom parse_ground_line(const Line& line, Signature* signature, std::string_view what) {
  std::string_view code = line.code;
  if (code.ends_with('.')) code.remove_suffix(1);
  Cursor c(code, line.number, line.column);
  Atom atom = parse_atom_at(c);
  c.expect_end();
  if (!atom.is_ground()) {
    throw ParseError(std::string(what) + " " + to_string(atom) + " contains variables", line.number, line.column);
  }
  if (signature) signature->check(atom, line.number, line.column);
  return atom;
}

class ModelParser {
 public:
  ModelParser(std::string_view text, Signature* signature) : lines_(split_lines(text)), signature_(signature) {}

  Ensemble run() {
    Ensemble ensemble;
    bool have_target = false;
    std::vector<TildeTree::NodePtr> roots;
    std::vector<std::size_t> root_lines;
    while (next_ < lines_.size()) {
      const Line& line = lines_[next_++];
      Cursor c(line.code, line.number, line.column);
      const std::string keyword = c.identifier("'target', 'combine' or 'tree'");
      if (keyword == "target") {
        const std::size_t column = (c.skip_ws(), c.column());
        ensemble.target = parse_atom_at(c);
        c.expect_end();
        try {
          validate_head(ensemble.target);
        } catch (const std::invalid_argument& e) {
          throw ParseError(e.what(), line.number, column);
        }
        if (signature_) signature_->check(ensemble.target, line.number, column);
        have_target = true;
      } else if (keyword == "combine") {
        const std::string mode = c.identifier("a combine mode");
        if (mode == "sum") {
          ensemble.combine = CombineMode::Sum;
        } else if (mode == "average") {
          ensemble.combine = CombineMode::Average;
        } else {
          throw ParseError("unknown combine mode '" + mode + "' (expected sum or average)", line.number, line.column);
        }
        c.expect_end();
      } else if (keyword == "tree") {
        c.expect_end();
        if (!have_target) throw ParseError("'tree' before 'target'", line.number, line.column);
        root_lines.push_back(line.number);
        roots.push_back(subtree(""));
      } else {
        throw ParseError("expected 'target', 'combine' or 'tree', found '" + keyword + "'", line.number,
                         line.column);
      }
    }
    if (!have_target) throw ParseError("model has no target declaration", last_line(), 1);
    if (roots.empty()) throw ParseError("model has no trees", last_line(), 1);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      try {
        ensemble.trees.emplace_back(roots[i]);
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), root_lines[i], 1);
      }
    }
    return ensemble;
  }

 private:
  std::size_t last_line() const { return lines_.empty() ? 1 : lines_.back().number; }

  TildeTree::NodePtr subtree(std::string_view label) {
    if (next_ >= lines_.size()) {
      const std::string what = label.empty() ? "a tree root" : "the '" + std::string(label) + "' child";
      throw ParseError("unexpected end of model, expected " + what, last_line(), 1);
    }
    const Line& line = lines_[next_++];
    Cursor c(line.code, line.number, line.column);
    if (!label.empty()) {
      const std::string found = c.identifier("'" + std::string(label) + "'");
      if (found != label) c.fail("expected '" + std::string(label) + "' child, found '" + found + "'");
    }
    const std::string kind = c.identifier("'node' or 'leaf'");
    if (kind == "leaf") {
      const double value = c.number();
      c.expect_end();
      return TildeTree::leaf(value);
    }
    if (kind != "node") c.fail("expected 'node' or 'leaf', found '" + kind + "'");
    std::vector<Atom> test = parse_conjunction(c, signature_);
    c.expect_end();
    auto yes = subtree("yes");
    auto no = subtree("no");
    return TildeTree::inner(std::move(test), std::move(yes), std::move(no));
  }

  std::vector<Line> lines_;
  Signature* signature_;
  std::size_t next_ = 0;
};

void write_node(std::ostringstream& out, const TildeTree::Node& node, std::size_t depth, std::string_view label) {
  out << std::string(2 * depth, ' ');
  if (!label.empty()) out << label << ' ';
  if (node.is_leaf()) {
    out << "leaf " << format_value(node.value) << '\n';
    return;
  }
  out << "node " << to_string(node.test) << '\n';
  write_node(out, *node.yes, depth + 1, "yes");
  write_node(out, *node.no, depth + 1, "no");
}

}  // namespace

Atom parse_atom(std::string_view text, std::size_t line) {
  Cursor c(text, line);
  Atom atom = parse_atom_at(c);
  c.expect_end();
  return atom;
}

Ensemble parse_model(std::string_view text, Signature* signature) { return ModelParser(text, signature).run(); }

std::string write_model(const Ensemble& ensemble) {
  std::ostringstream out;
  out << "target " << to_string(ensemble.target) << '\n';
  out << "combine " << to_string(ensemble.combine) << '\n';
  for (const TildeTree& tree : ensemble.trees) {
    out << "tree\n";
    write_node(out, tree.root(), 0, "");
  }
  return out.str();
}

FactBase parse_facts(std::string_view text, Signature* signature) {
  FactBase facts;
  for (const Line& line : split_lines(text)) facts.add(parse_ground_line(line, signature, "fact"));
  return facts;
}

std::string write_facts(const FactBase& facts) {
  std::string out;
  for (const Atom& a : facts.facts()) {
    out += to_string(a);
    out += ".\n";
  }
  return out;
}

ExampleSet parse_examples(std::string_view positive, std::string_view negative, Signature* signature,
                          std::vector<std::string>* warnings) {
  ExampleSet set;
  std::map<Atom, bool> labels;
  std::optional<std::pair<std::string, std::size_t>> target;
  auto read = [&](std::string_view text, bool is_positive) {
    const char* file = is_positive ? "positive" : "negative";
    for (const Line& line : split_lines(text)) {
      Atom atom = parse_ground_line(line, signature, "example");
      if (!target) target.emplace(atom.predicate, atom.arity());
      if (target->first != atom.predicate || target->second != atom.arity()) {
        throw ParseError("example " + to_string(atom) + " does not match target " + target->first + "/" +
                             std::to_string(target->second),
                         line.number, line.column);
      }
      auto [it, fresh] = labels.emplace(atom, is_positive);
      if (!fresh) {
        if (it->second != is_positive) {
          throw ParseError("example " + to_string(atom) + " is labeled both positive and negative", line.number,
                           line.column);
        }
        if (warnings) {
          warnings->push_back(std::string(file) + " examples, line " + std::to_string(line.number) +
                              ": duplicate example " + to_string(atom) + " ignored");
        }
        continue;
      }
      set.examples.push_back(Example{std::move(atom), is_positive});
    }
  };
  read(positive, true);
  read(negative, false);
  return set;
}

std::string write_examples(const ExampleSet& examples, bool positive) {
  std::string out;
  for (const Example& e : examples.examples) {
    if (e.positive != positive) continue;
    out += to_string(e.atom);
    out += ".\n";
  }
  return out;
}

std::string format_value(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string write_list(const DecisionList& list) {
  std::size_t atoms = 0;
  for (const Clause& r : list.rules) atoms += r.body.size();
  const double avg = list.rules.empty() ? 0.0 : static_cast<double>(atoms) / static_cast<double>(list.rules.size());
  char avg_text[32];
  std::snprintf(avg_text, sizeof avg_text, "%.4f", avg);

  std::ostringstream out;
  out << "% decision list\n";
  out << "% target: " << to_string(list.target) << '\n';
  out << "% combine: " << to_string(list.combine) << '\n';
  out << "% trees: " << list.tree_count << '\n';
  if (!list.method.empty()) out << "% method: " << list.method << '\n';
  out << "% rules: " << list.rules.size() << '\n';
  out << "% avg_body_length: " << avg_text << '\n';
  for (const Clause& r : list.rules) {
    out << format_value(r.value) << ": " << rule_text(r);
    if (!r.provenance.empty()) {
      out << "  % leaves";
      for (const LeafRef& p : r.provenance) out << ' ' << p.tree << ':' << p.leaf;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::vector<LeafRef> parse_provenance(std::string_view comment, const Line& line) {
  std::vector<LeafRef> out;
  comment = trim(comment);
  if (!comment.starts_with("leaves")) return out;
  comment.remove_prefix(6);
  std::istringstream in{std::string(comment)};
  std::string item;
  while (in >> item) {
    const auto colon = item.find(':');
    LeafRef ref;
    const char* b = item.data();
    const char* e = item.data() + item.size();
    if (colon == std::string::npos || std::from_chars(b, b + colon, ref.tree).ec != std::errc() ||
        std::from_chars(b + colon + 1, e, ref.leaf).ec != std::errc()) {
      throw ParseError("malformed leaf reference '" + item + "'", line.number, line.column);
    }
    out.push_back(ref);
  }
  return out;
}

}  // namespace

DecisionList parse_list(std::string_view text) {
  DecisionList list;
  bool have_target = false;
  std::size_t last_line = 1;
  for (const Line& line : split_lines(text, true)) {
    last_line = line.number;
    if (line.code.empty()) {
      std::string_view header = trim(line.comment);
      const auto colon = header.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string_view key = trim(header.substr(0, colon));
      const std::string_view value = trim(header.substr(colon + 1));
      if (key == "target") {
        list.target = parse_atom(value, line.number);
        have_target = true;
      } else if (key == "combine") {
        if (value == "sum") {
          list.combine = CombineMode::Sum;
        } else if (value == "average") {
          list.combine = CombineMode::Average;
        } else {
          throw ParseError("unknown combine mode '" + std::string(value) + "'", line.number, line.column);
        }
      } else if (key == "trees") {
        if (std::from_chars(value.data(), value.data() + value.size(), list.tree_count).ec != std::errc() ||
            list.tree_count == 0) {
          throw ParseError("tree count must be a positive integer", line.number, line.column);
        }
      } else if (key == "method") {
        list.method = std::string(value);
      }
      continue;
    }

    Cursor c(line.code, line.number, line.column);
    Clause rule;
    rule.value = c.number();
    c.expect(":");
    const std::size_t head_column = (c.skip_ws(), c.column());
    rule.head = parse_atom_at(c);
    c.expect(":-");
    if (!c.consume(".")) {
      rule.body = parse_conjunction(c, nullptr);
      c.expect(".");
    }
    c.expect_end();
    rule.provenance = parse_provenance(line.comment, line);
    if (!have_target) {
      list.target = rule.head;
      have_target = true;
    }
    if (rule.head != list.target) {
      throw ParseError("rule head " + to_string(rule.head) + " differs from target " + to_string(list.target),
                       line.number, head_column);
    }
    list.rules.push_back(std::move(rule));
  }
  if (list.rules.empty()) throw ParseError("decision list has no rules", last_line, 1);
  if (!list.rules.back().body.empty()) {
    throw ParseError("decision list must end with an empty-body rule", last_line, 1);
  }
  try {
    validate_head(list.target);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 1, 1);
  }
  return list;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace cote
