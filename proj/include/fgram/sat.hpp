#pragma once

// CNF formulas, the string encoding of CNF into the builtin grammar's
// language, a brute-force satisfiability oracle, and the harness comparing
// the oracle against grammar recognition.
//
// Encoding: a formula becomes one `#`-prefixed block per clause; each literal
// is its variable index in binary (most significant bit first, no leading
// zeros) followed by `p` (positive) or `q` (negated). (p1 | -p2) & (p2)
// becomes "#1p10q#10p".

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fgram/error.hpp"
#include "fgram/grammar.hpp"
#include "fgram/recognizer.hpp"

namespace fgram {

struct Literal {
  std::uint32_t var = 1;  // >= 1
  bool negated = false;

  friend bool operator==(Literal, Literal) = default;
  friend auto operator<=>(Literal, Literal) = default;
};

struct Clause {
  std::vector<Literal> literals;  // non-empty

  friend bool operator==(const Clause&, const Clause&) = default;
};

struct CnfFormula {
  std::vector<Clause> clauses;

  friend bool operator==(const CnfFormula&, const CnfFormula&) = default;
};

using Assignment = std::map<std::uint32_t, bool>;

inline std::set<std::uint32_t> variables_of(const CnfFormula& f) {
  std::set<std::uint32_t> out;
  for (const auto& c : f.clauses)
    for (const auto& l : c.literals) out.insert(l.var);
  return out;
}

// (1 -2)(2) style.
inline std::string to_string(const CnfFormula& f) {
  std::string out;
  for (const auto& c : f.clauses) {
    out += "(";
    for (std::size_t i = 0; i < c.literals.size(); ++i) {
      if (i) out += " ";
      if (c.literals[i].negated) out += "-";
      out += std::to_string(c.literals[i].var);
    }
    out += ")";
  }
  return out.empty() ? "()" : out;
}

// ---------------------------------------------------------------------------
// DIMACS

struct DimacsParse {
  CnfFormula formula;
  std::vector<std::string> warnings;
};

namespace detail {

inline constexpr std::int64_t kMaxVariable = std::numeric_limits<std::int32_t>::max();

inline std::int64_t read_int(Cursor& cur) {
  std::size_t line = cur.line(), column = cur.column();
  std::string digits;
  if (cur.peek() == '-' || cur.peek() == '+') digits.push_back(cur.get());
  while (std::isdigit(static_cast<unsigned char>(cur.peek()))) digits.push_back(cur.get());
  if (digits.empty() || digits == "-" || digits == "+") throw ParseError("expected an integer", line, column);
  if (digits.size() > 11) throw ParseError("integer out of range", line, column);
  std::int64_t v = std::stoll(digits);
  if (v > kMaxVariable || v < -kMaxVariable) throw ParseError("integer out of range", line, column);
  return v;
}

inline Literal make_literal(std::int64_t v, std::int64_t declared, std::size_t line, std::size_t column) {
  if (declared >= 0 && (v > declared || -v > declared))
    throw ParseError("literal " + std::to_string(v) + " exceeds declared variable count", line, column);
  return Literal{static_cast<std::uint32_t>(v < 0 ? -v : v), v < 0};
}

// `(1 -2)(2)`
inline DimacsParse parse_compact(std::string_view text) {
  Cursor cur(text);
  DimacsParse out;
  while (true) {
    cur.skip_space();
    if (cur.at_end()) break;
    if (cur.peek() != '(') cur.fail("expected '('");
    std::size_t line = cur.line(), column = cur.column();
    cur.get();
    Clause c;
    while (true) {
      cur.skip_space();
      if (cur.at_end()) cur.fail("unterminated clause");
      if (cur.peek() == ')') {
        cur.get();
        break;
      }
      std::size_t l = cur.line(), col = cur.column();
      std::int64_t v = read_int(cur);
      if (v == 0) throw ParseError("variable 0 is not allowed", l, col);
      c.literals.push_back(make_literal(v, -1, l, col));
    }
    if (c.literals.empty()) throw ParseError("empty clause", line, column);
    out.formula.clauses.push_back(std::move(c));
  }
  return out;
}

inline DimacsParse parse_dimacs_text(std::string_view text) {
  Cursor cur(text);
  DimacsParse out;
  std::int64_t vars = -1, clauses = -1;
  Clause current;
  std::size_t clause_line = 0, clause_column = 0;
  while (true) {
    cur.skip_space();
    if (cur.at_end()) break;
    char c = cur.peek();
    if (c == 'c' || c == '%') {
      while (!cur.at_end() && cur.peek() != '\n') cur.get();
      continue;
    }
    if (c == 'p') {
      std::size_t line = cur.line(), column = cur.column();
      if (vars >= 0) throw ParseError("second problem line", line, column);
      cur.get();
      cur.skip_space();
      if (cur.read_symbol() != "cnf") throw ParseError("malformed header (expected 'p cnf V C')", line, column);
      cur.skip_space();
      vars = read_int(cur);
      cur.skip_space();
      clauses = read_int(cur);
      if (vars < 0 || clauses < 0) throw ParseError("malformed header (negative count)", line, column);
      continue;
    }
    if (vars < 0) cur.fail("clause before 'p cnf' header");
    std::size_t line = cur.line(), column = cur.column();
    std::int64_t v = read_int(cur);
    if (current.literals.empty()) {
      clause_line = line;
      clause_column = column;
    }
    if (v == 0) {
      if (current.literals.empty()) throw ParseError("empty clause", line, column);
      out.formula.clauses.push_back(std::move(current));
      current = Clause{};
    } else {
      current.literals.push_back(make_literal(v, vars, line, column));
    }
  }
  if (vars < 0) throw ParseError("missing 'p cnf' header", cur.line(), cur.column());
  if (!current.literals.empty()) {
    out.warnings.push_back("line " + std::to_string(clause_line) + ", column " + std::to_string(clause_column) +
                           ": last clause is not terminated by 0");
    out.formula.clauses.push_back(std::move(current));
  }
  if (static_cast<std::int64_t>(out.formula.clauses.size()) != clauses)
    out.warnings.push_back("header declares " + std::to_string(clauses) + " clauses, found " +
                           std::to_string(out.formula.clauses.size()));
  return out;
}

}  // namespace detail

// DIMACS CNF, or the compact form `(1 -2)(2)` when the first non-blank
// character is '('. Clause-count mismatches are warnings, not errors.
inline DimacsParse parse_dimacs_with_warnings(std::string_view text) {
  auto first = std::find_if(text.begin(), text.end(), [](char c) { return !std::isspace(static_cast<unsigned char>(c)); });
  if (first != text.end() && *first == '(') return detail::parse_compact(text);
  return detail::parse_dimacs_text(text);
}

inline CnfFormula parse_dimacs(std::string_view text) { return parse_dimacs_with_warnings(text).formula; }

inline std::string format_dimacs(const CnfFormula& f) {
  auto vars = variables_of(f);
  std::string out = "p cnf " + std::to_string(vars.empty() ? 0 : *vars.rbegin()) + " " +
                    std::to_string(f.clauses.size()) + "\n";
  for (const auto& c : f.clauses) {
    for (const auto& l : c.literals) out += (l.negated ? "-" : "") + std::to_string(l.var) + " ";
    out += "0\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semantics

// Throws std::invalid_argument when `a` misses one of f's variables.
inline bool evaluate(const CnfFormula& f, const Assignment& a) {
  for (const auto& c : f.clauses)
    for (const auto& l : c.literals)
      if (!a.count(l.var)) throw std::invalid_argument("assignment misses variable " + std::to_string(l.var));
  for (const auto& c : f.clauses) {
    bool sat = std::any_of(c.literals.begin(), c.literals.end(),
                           [&a](const Literal& l) { return a.at(l.var) != l.negated; });
    if (!sat) return false;
  }
  return true;
}

inline constexpr std::size_t kDefaultVariableCap = 20;

// Enumerates assignments over f's variables in counting order, smallest
// variable least significant, false before true. Returns the first model.
inline std::optional<Assignment> brute_force_sat(const CnfFormula& f, std::size_t cap = kDefaultVariableCap) {
  std::vector<std::uint32_t> vars;
  for (auto v : variables_of(f)) vars.push_back(v);
  if (vars.size() > cap || vars.size() >= 63)
    throw std::length_error("brute_force_sat: " + std::to_string(vars.size()) + " variables exceed the cap of " +
                            std::to_string(cap));
  const std::uint64_t total = std::uint64_t{1} << vars.size();
  Assignment a;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    for (std::size_t i = 0; i < vars.size(); ++i) a[vars[i]] = (bits >> i) & 1u;
    if (evaluate(f, a)) return a;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reduction

inline std::string binary(std::uint32_t v) {
  std::string out;
  for (; v; v >>= 1) out.push_back(static_cast<char>('0' + (v & 1u)));
  std::reverse(out.begin(), out.end());
  return out;
}

inline std::size_t bit_length(std::uint32_t v) {
  std::size_t n = 0;
  for (; v; v >>= 1) ++n;
  return n;
}

// Sum over clauses of 1 + sum over literals of (bit_length(var) + 1).
inline std::size_t reduction_length(const CnfFormula& f) {
  std::size_t n = 0;
  for (const auto& c : f.clauses) {
    n += 1;
    for (const auto& l : c.literals) n += bit_length(l.var) + 1;
  }
  return n;
}

inline std::string reduce_to_string(const CnfFormula& f) {
  std::string out;
  out.reserve(reduction_length(f));
  for (const auto& c : f.clauses) {
    if (c.literals.empty()) throw std::invalid_argument("reduce_to_string: empty clause has no encoding");
    out.push_back('#');
    for (const auto& l : c.literals) {
      if (l.var == 0) throw std::invalid_argument("reduce_to_string: variable index 0");
      out += binary(l.var);
      out.push_back(l.negated ? 'q' : 'p');
    }
  }
  return out;
}

// Binary index strings from extract_assignment become variable numbers.
// Variables of `f` not mentioned in `bits` default to false.
inline Assignment to_assignment(const CnfFormula& f, const std::map<std::string, bool>& bits) {
  Assignment out;
  for (auto v : variables_of(f)) out[v] = false;
  for (const auto& [b, value] : bits) {
    if (b.empty() || b.size() > 32 || b.front() != '1') continue;
    out[static_cast<std::uint32_t>(std::stoull(b, nullptr, 2))] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle vs. recognizer

struct EquivalenceOptions {
  std::size_t variable_cap = kDefaultVariableCap;
  std::size_t max_states = 0;  // recognizer budget, 0: unlimited
};

struct EquivalenceReport {
  enum class Status : std::uint8_t { kAgree, kDisagree, kBudgetExhausted };

  Status status = Status::kAgree;
  bool oracle_satisfiable = false;
  bool recognizer_accepts = false;
  std::string image;
  std::optional<Derivation> derivation;
  std::optional<Assignment> oracle_assignment;
  std::optional<Assignment> extracted_assignment;
  std::optional<bool> extracted_satisfies;  // set when both sides accept
  std::size_t states_explored = 0;

  bool agreement() const { return status == Status::kAgree; }
};

inline const char* to_string(EquivalenceReport::Status s) {
  switch (s) {
    case EquivalenceReport::Status::kAgree: return "agree";
    case EquivalenceReport::Status::kDisagree: return "DISAGREE";
    case EquivalenceReport::Status::kBudgetExhausted: return "budget-exhausted";
  }
  return "?";
}

inline EquivalenceReport equivalence_check(const CnfFormula& f, const UnificationGrammar& g,
                                           const EquivalenceOptions& options = {}) {
  EquivalenceReport r;
  r.image = reduce_to_string(f);
  if (r.image.size() != reduction_length(f)) throw std::logic_error("reduction length identity violated");

  r.oracle_assignment = brute_force_sat(f, options.variable_cap);
  r.oracle_satisfiable = r.oracle_assignment.has_value();

  RecognitionResult rec = recognize(g, r.image, RecognizeOptions{options.max_states});
  r.states_explored = rec.states_explored;
  if (rec.outcome == Outcome::kBudgetExhausted) {
    r.status = EquivalenceReport::Status::kBudgetExhausted;
    return r;
  }
  r.recognizer_accepts = rec.accepted;
  r.derivation = rec.derivation;
  if (r.recognizer_accepts && r.oracle_satisfiable) {
    r.extracted_assignment = to_assignment(f, extract_assignment(*rec.solution, *rec.derivation));
    r.extracted_satisfies = evaluate(f, *r.extracted_assignment);
  }
  bool agree = r.oracle_satisfiable == r.recognizer_accepts && r.extracted_satisfies.value_or(true);
  r.status = agree ? EquivalenceReport::Status::kAgree : EquivalenceReport::Status::kDisagree;
  return r;
}

inline EquivalenceReport equivalence_check(const CnfFormula& f, const EquivalenceOptions& options = {}) {
  static const UnificationGrammar g = builtin_unification_grammar();
  return equivalence_check(f, g, options);
}

inline std::string format_assignment(const Assignment& a) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, b] : a) {
    out += first ? "" : ", ";
    out += std::to_string(v) + ":" + (b ? "T" : "F");
    first = false;
  }
  return out + "}";
}

// One line per report: formula, image, oracle and recognizer verdicts, status.
inline std::string format_report_line(const CnfFormula& f, const EquivalenceReport& r) {
  std::string out = to_string(f) + "  \"" + r.image + "\"  oracle=" + (r.oracle_satisfiable ? "SAT" : "UNSAT") +
                    "  grammar=";
  out += r.status == EquivalenceReport::Status::kBudgetExhausted ? "BUDGET"
         : r.recognizer_accepts                                   ? "ACCEPT"
                                                                  : "REJECT";
  if (r.extracted_assignment)
    out += "  assignment=" + format_assignment(*r.extracted_assignment) +
           (r.extracted_satisfies.value_or(false) ? " (satisfies)" : " (FAILS)");
  return out + "  " + to_string(r.status);
}

}  // namespace fgram
