#pragma once

// Right-linear grammars, optionally annotated with path equations over the
// rule-local variables ?x0 (the head's node) and ?x1 (the tail's node).
//
// File format, one rule per line:
//
//   Head -> 't1' 't2' Tail @ formula
//   Head -> _                        (empty body)
//
// Terminals are single-quoted, nonterminals are bare capitalised symbols, and
// a missing `@` part is the trivially true annotation. The head of the first
// rule is the start symbol. Lines whose first non-blank character is `#` are
// comments.
//
// The negated-literal marker of the SAT encoding is spelled `q`.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fgram/detail/text.hpp"
#include "fgram/error.hpp"
#include "fgram/formula.hpp"

namespace fgram {

using NonTerminal = std::string;
using Terminal = std::string;

struct RuleBody {
  std::vector<Terminal> terminals;
  std::optional<NonTerminal> tail;

  bool is_epsilon() const { return terminals.empty() && !tail; }
  bool is_unit() const { return terminals.empty() && tail.has_value(); }

  friend bool operator==(const RuleBody&, const RuleBody&) = default;
};

struct Production {
  NonTerminal head;
  RuleBody body;

  friend bool operator==(const Production&, const Production&) = default;
};

struct RegularGrammar {
  NonTerminal start;
  std::vector<Production> productions;

  friend bool operator==(const RegularGrammar&, const RegularGrammar&) = default;
};

struct AnnotatedRule {
  Production production;
  std::optional<Formula> annotation;  // nullopt: no constraint

  const NonTerminal& head() const { return production.head; }
  const RuleBody& body() const { return production.body; }

  friend bool operator==(const AnnotatedRule&, const AnnotatedRule&) = default;
};

struct UnificationGrammar {
  NonTerminal start;
  std::vector<AnnotatedRule> rules;

  friend bool operator==(const UnificationGrammar&, const UnificationGrammar&) = default;
};

// Raised for grammars that parse but violate a structural rule.
class GrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kHeadVariable = "x0";
inline constexpr std::string_view kTailVariable = "x1";

// ---------------------------------------------------------------------------
// Validation

namespace detail {

// Quoted terminals may use any non-blank character except the quote itself.
inline bool is_terminal_text(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == '\'' || std::isspace(static_cast<unsigned char>(c));
  });
}

inline bool is_nonterminal_name(std::string_view s) {
  return is_symbol(s) && std::isupper(static_cast<unsigned char>(s.front()));
}

template <typename Rules, typename ProductionOf>
void check_structure(const NonTerminal& start, const Rules& rules, ProductionOf production_of) {
  if (rules.empty()) throw GrammarError("grammar has no rules");
  std::set<NonTerminal> heads;
  std::set<Terminal> terminals;
  for (const auto& r : rules) {
    const Production& p = production_of(r);
    if (!is_nonterminal_name(p.head)) throw GrammarError("bad nonterminal name '" + p.head + "'");
    heads.insert(p.head);
    for (const auto& t : p.body.terminals) {
      if (!is_terminal_text(t)) throw GrammarError("bad terminal '" + t + "'");
      terminals.insert(t);
    }
  }
  if (!heads.count(start)) throw GrammarError("start symbol " + start + " has no rule");
  for (const auto& r : rules) {
    const Production& p = production_of(r);
    if (p.body.tail && !heads.count(*p.body.tail))
      throw GrammarError("nonterminal " + *p.body.tail + " in rule for " + p.head + " has no rule");
  }
  for (const auto& t : terminals)
    if (heads.count(t)) throw GrammarError("symbol '" + t + "' is both terminal and nonterminal");
}

inline void check_annotation(const AnnotatedRule& r) {
  if (!r.annotation) return;
  for (const auto& v : variables_of(*r.annotation)) {
    if (v == kTailVariable && !r.body().tail)
      throw GrammarError("?x1 used in rule for " + r.head() + " without a nonterminal in its body");
    if (v != kHeadVariable && v != kTailVariable)
      throw GrammarError("annotation variable ?" + v + " in rule for " + r.head() +
                         " (only ?x0 and ?x1 are allowed)");
  }
}

}  // namespace detail

inline void validate(const UnificationGrammar& g) {
  detail::check_structure(g.start, g.rules,
                          [](const AnnotatedRule& r) -> const Production& { return r.production; });
  for (const auto& r : g.rules) detail::check_annotation(r);
}

inline void validate(const RegularGrammar& g) {
  detail::check_structure(g.start, g.productions,
                          [](const Production& p) -> const Production& { return p; });
}

// ---------------------------------------------------------------------------
// Text

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline AnnotatedRule parse_rule_line(std::string_view line, std::size_t line_no) {
  std::size_t col_base = 1;
  auto fail = [&](const std::string& msg, std::size_t col) -> void {
    throw ParseError(msg, line_no, col);
  };

  // Split off the annotation at the first '@' outside quotes.
  std::size_t at = std::string_view::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') quoted = !quoted;
    if (line[i] == '@' && !quoted) {
      at = i;
      break;
    }
  }
  std::string_view lhs = line.substr(0, at);

  AnnotatedRule rule;
  std::size_t arrow = lhs.find("->");
  if (arrow == std::string_view::npos) fail("expected '->'", col_base);
  rule.production.head = trim(lhs.substr(0, arrow));
  if (!is_nonterminal_name(rule.production.head))
    fail("expected a capitalised nonterminal before '->'", col_base);

  Cursor cur(lhs.substr(arrow + 2));
  bool epsilon = false;
  RuleBody& body = rule.production.body;
  while (true) {
    cur.skip_space();
    if (cur.at_end()) break;
    std::size_t col = arrow + 2 + cur.column();
    if (body.tail) fail("nonterminal must be the last symbol of a rule body", col);
    char c = cur.peek();
    if (c == '\'') {
      cur.get();
      std::string t;
      while (!cur.at_end() && cur.peek() != '\'') t.push_back(cur.get());
      if (cur.at_end()) fail("unterminated terminal quote", col);
      cur.get();
      if (!is_terminal_text(t)) fail("bad terminal '" + t + "'", col);
      if (epsilon) fail("'_' must be the whole rule body", col);
      body.terminals.push_back(std::move(t));
    } else {
      std::string sym = cur.read_symbol();
      if (sym.empty()) fail(std::string("unexpected character '") + c + "'", col);
      if (sym == "_") {
        if (epsilon || !body.terminals.empty()) fail("'_' must be the whole rule body", col);
        epsilon = true;
      } else if (is_nonterminal_name(sym)) {
        if (epsilon) fail("'_' must be the whole rule body", col);
        body.tail = std::move(sym);
      } else {
        fail("'" + sym + "' is neither a quoted terminal nor a capitalised nonterminal", col);
      }
    }
  }
  if (!epsilon && body.terminals.empty() && !body.tail)
    fail("empty rule body (write '_' for the empty string)", col_base);

  if (at != std::string_view::npos) {
    std::string_view text = line.substr(at + 1);
    try {
      rule.annotation = parse_formula(text);
    } catch (const ParseError& e) {
      throw ParseError(std::string("annotation: ") + e.what(), line_no, at + 1 + e.column());
    }
  }
  return rule;
}

}  // namespace detail

inline UnificationGrammar parse_grammar(std::string_view text) {
  UnificationGrammar g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    g.rules.push_back(detail::parse_rule_line(line, line_no));
  }
  if (g.rules.empty()) throw ParseError("grammar has no rules", line_no == 0 ? 1 : line_no, 1);
  g.start = g.rules.front().head();
  validate(g);
  return g;
}

inline std::string format_production(const Production& p) {
  std::string out = p.head + " ->";
  if (p.body.is_epsilon()) return out + " _";
  for (const auto& t : p.body.terminals) out += " '" + t + "'";
  if (p.body.tail) out += " " + *p.body.tail;
  return out;
}

inline std::string format_grammar(const UnificationGrammar& g) {
  std::string out;
  for (const auto& r : g.rules) {
    out += format_production(r.production);
    if (r.annotation) out += " @ " + format_formula(*r.annotation);
    out += "\n";
  }
  return out;
}

inline std::string format_grammar(const RegularGrammar& g) {
  std::string out;
  for (const auto& p : g.productions) out += format_production(p) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Builtin grammars

inline RegularGrammar backbone(const UnificationGrammar& g) {
  RegularGrammar out{g.start, {}};
  for (const auto& r : g.rules) out.productions.push_back(r.production);
  return out;
}

inline UnificationGrammar as_unification_grammar(const RegularGrammar& g) {
  UnificationGrammar out{g.start, {}};
  for (const auto& p : g.productions) out.rules.push_back({p, std::nullopt});
  return out;
}

namespace detail {

struct BuiltinRule {
  const char* head;
  const char* terminal;  // "" for none
  const char* tail;      // "" for none
  const char* annotation;
};

// Attributes: assign, new, v, 0, 1. Constants: + and -. `0 new ?x0` is the
// `0` value of the `new` value of the head node: one step down the binary
// index of the literal being selected.
inline constexpr BuiltinRule kUnificationRules[] = {
    {"S", "#", "F", "assign ?x0 = assign ?x1"},
    {"S", "#", "T", "assign ?x0 = assign ?x1 & assign ?x0 = new ?x1"},
    {"S", "", "", "v assign ?x0 = +"},
    {"F", "0", "F", "assign ?x0 = assign ?x1"},
    {"F", "1", "F", "assign ?x0 = assign ?x1"},
    {"F", "p", "F", "assign ?x0 = assign ?x1"},
    {"F", "q", "F", "assign ?x0 = assign ?x1"},
    {"F", "p", "T", "assign ?x0 = assign ?x1 & assign ?x0 = new ?x1"},
    {"F", "q", "T", "assign ?x0 = assign ?x1 & assign ?x0 = new ?x1"},
    {"T", "0", "T", "assign ?x0 = assign ?x1 & 0 new ?x0 = new ?x1"},
    {"T", "1", "T", "assign ?x0 = assign ?x1 & 1 new ?x0 = new ?x1"},
    {"T", "p", "A", "assign ?x0 = assign ?x1 & v new ?x0 = +"},
    {"T", "q", "A", "assign ?x0 = assign ?x1 & v new ?x0 = -"},
    {"A", "", "B", "assign ?x0 = assign ?x1"},
    {"A", "", "S", "assign ?x0 = assign ?x1"},
    {"B", "0", "B", "assign ?x0 = assign ?x1"},
    {"B", "1", "B", "assign ?x0 = assign ?x1"},
    {"B", "p", "A", "assign ?x0 = assign ?x1"},
    {"B", "q", "A", "assign ?x0 = assign ?x1"},
};

}  // namespace detail

// The fixed unification grammar whose recognition problem encodes SAT.
inline UnificationGrammar builtin_unification_grammar() {
  UnificationGrammar g{"S", {}};
  for (const auto& r : detail::kUnificationRules) {
    AnnotatedRule rule;
    rule.production.head = r.head;
    if (*r.terminal) rule.production.body.terminals.emplace_back(r.terminal);
    if (*r.tail) rule.production.body.tail = r.tail;
    rule.annotation = parse_formula(r.annotation);
    g.rules.push_back(std::move(rule));
  }
  return g;
}

// Nondeterministic grammar for (#((0|1)*(p|q))+)*.
inline RegularGrammar builtin_regular_grammar() {
  RegularGrammar g{"S", {}};
  for (const auto& r : detail::kUnificationRules) {
    Production p;
    p.head = r.head;
    if (*r.terminal) p.body.terminals.emplace_back(r.terminal);
    if (*r.tail) p.body.tail = r.tail;
    g.productions.push_back(std::move(p));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Analyses

// True iff no nonterminal derives itself without consuming input. In a
// right-linear grammar that means no cycle through unit rules X -> Y.
inline bool check_offline_parsability(const RegularGrammar& g) {
  std::map<NonTerminal, std::vector<NonTerminal>> unit;
  for (const auto& p : g.productions)
    if (p.body.is_unit()) unit[p.head].push_back(*p.body.tail);

  std::map<NonTerminal, int> mark;  // 0 new, 1 active, 2 done
  auto dfs = [&](auto&& self, const NonTerminal& n) -> bool {
    mark[n] = 1;
    for (const auto& m : unit[n]) {
      if (mark[m] == 1) return false;
      if (mark[m] == 0 && !self(self, m)) return false;
    }
    mark[n] = 2;
    return true;
  };
  for (const auto& [n, unused] : unit)
    if (mark[n] == 0 && !dfs(dfs, n)) return false;
  return true;
}

inline bool check_offline_parsability(const UnificationGrammar& g) {
  return check_offline_parsability(backbone(g));
}

inline std::set<Terminal> terminal_alphabet(const RegularGrammar& g) {
  std::set<Terminal> out;
  for (const auto& p : g.productions) out.insert(p.body.terminals.begin(), p.body.terminals.end());
  return out;
}

// Splits an input string into terminal symbols: whitespace-separated tokens
// when the string contains whitespace, single characters otherwise. Throws
// std::invalid_argument on a symbol outside `alphabet`.
inline std::vector<Terminal> tokenize_input(std::string_view w, const std::set<Terminal>& alphabet) {
  std::vector<Terminal> out;
  bool spaced = std::any_of(w.begin(), w.end(),
                            [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (spaced) {
    std::istringstream in{std::string(w)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
  } else {
    for (char c : w) out.emplace_back(1, c);
  }
  for (const auto& t : out)
    if (!alphabet.count(t)) throw std::invalid_argument("unknown input symbol '" + t + "'");
  return out;
}

// Plain recognition by the reachable-configuration sets of the nondeterministic
// automaton; linear in |w| for a fixed grammar.
inline bool backbone_recognize(const RegularGrammar& g, std::string_view w) {
  std::vector<Terminal> input = tokenize_input(w, terminal_alphabet(g));
  const std::size_t n = input.size();

  std::map<NonTerminal, std::vector<const Production*>> by_head;
  for (const auto& p : g.productions) by_head[p.head].push_back(&p);

  std::vector<std::set<NonTerminal>> reach(n + 1);
  reach[0].insert(g.start);
  for (std::size_t pos = 0; pos <= n; ++pos) {
    std::vector<NonTerminal> work(reach[pos].begin(), reach[pos].end());
    while (!work.empty()) {
      NonTerminal x = std::move(work.back());
      work.pop_back();
      for (const Production* p : by_head[x]) {
        const auto& ts = p->body.terminals;
        if (pos + ts.size() > n || !std::equal(ts.begin(), ts.end(), input.begin() + pos)) continue;
        std::size_t next = pos + ts.size();
        if (!p->body.tail) {
          if (next == n) return true;
          continue;
        }
        if (reach[next].insert(*p->body.tail).second && next == pos) work.push_back(*p->body.tail);
      }
    }
  }
  return false;
}

}  // namespace fgram
