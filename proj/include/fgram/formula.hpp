#pragma once

// Path-equation description language: syntax, primitive normal form, and the
// flattening of arbitrary equations into primitive formulas.
//
// Text syntax:
//   formula := eq ('&' eq)*
//   eq      := path? term '=' path? term
//   path    := symbol+            (written outermost attribute first)
//   term    := '?'symbol | symbol (variable | constant)
// `#` starts a comment that runs to the end of the line.
//
// `number subject ?x` denotes the `number` value of the `subject` value of x:
// the rightmost attribute is applied first.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fgram/detail/text.hpp"
#include "fgram/error.hpp"

namespace fgram {

using Attribute = std::string;
using Path = std::vector<Attribute>;

class Term {
 public:
  enum class Kind : std::uint8_t { kVariable, kConstant };

  Term() = default;
  static Term variable(std::string name) {
    return Term(Kind::kVariable, std::move(name));
  }
  static Term constant(std::string name) {
    return Term(Kind::kConstant, std::move(name));
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool is_variable() const { return kind_ == Kind::kVariable; }
  bool is_constant() const { return kind_ == Kind::kConstant; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;

 private:
  Term(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  Kind kind_ = Kind::kConstant;
  std::string name_;
};

inline std::string to_string(const Term& t) {
  return t.is_variable() ? "?" + t.name() : t.name();
}

// p s = q t
struct Equation {
  Path left_path;
  Term left;
  Path right_path;
  Term right;

  friend bool operator==(const Equation&, const Equation&) = default;
};

struct Formula {
  std::vector<Equation> conjuncts;

  friend bool operator==(const Formula&, const Formula&) = default;
};

// `s = t` when `feature` is empty, `f s = t` otherwise.
struct PrimitiveFormula {
  std::optional<Attribute> feature;
  Term subject;
  Term object;

  static PrimitiveFormula term_eq(Term s, Term t) {
    return {std::nullopt, std::move(s), std::move(t)};
  }
  static PrimitiveFormula feature_eq(Attribute f, Term s, Term t) {
    return {std::move(f), std::move(s), std::move(t)};
  }

  bool is_feature_eq() const { return feature.has_value(); }
  bool is_term_eq() const { return !feature.has_value(); }

  friend bool operator==(const PrimitiveFormula&,
                         const PrimitiveFormula&) = default;
  friend auto operator<=>(const PrimitiveFormula&,
                          const PrimitiveFormula&) = default;
};

inline std::string to_string(const PrimitiveFormula& p) {
  std::string out;
  if (p.feature) out = *p.feature + " ";
  return out + to_string(p.subject) + " = " + to_string(p.object);
}

struct PrimitiveFormulaHash {
  std::size_t operator()(const PrimitiveFormula& p) const noexcept {
    std::hash<std::string> h;
    std::size_t seed = p.feature ? h(*p.feature) : 0x9e3779b9u;
    auto mix = [&seed](std::size_t v) {
      seed ^= v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
    };
    mix(h(p.subject.name()) * 2 + static_cast<std::size_t>(p.subject.kind()));
    mix(h(p.object.name()) * 2 + static_cast<std::size_t>(p.object.kind()));
    return seed;
  }
};

// Duplicate-free, insertion-ordered set of primitive formulas.
class PrimitiveSet {
 public:
  using const_iterator = std::vector<PrimitiveFormula>::const_iterator;

  PrimitiveSet() = default;
  PrimitiveSet(std::initializer_list<PrimitiveFormula> items) {
    for (const auto& p : items) insert(p);
  }

  // Returns false when `p` is already a member.
  bool insert(PrimitiveFormula p) {
    if (!index_.insert(p).second) return false;
    items_.push_back(std::move(p));
    return true;
  }

  bool contains(const PrimitiveFormula& p) const { return index_.count(p) > 0; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const_iterator begin() const { return items_.begin(); }
  const_iterator end() const { return items_.end(); }
  const PrimitiveFormula& operator[](std::size_t i) const { return items_[i]; }

  // Set equality; insertion order is ignored.
  friend bool operator==(const PrimitiveSet& a, const PrimitiveSet& b) {
    return a.index_ == b.index_;
  }

 private:
  std::vector<PrimitiveFormula> items_;
  std::unordered_set<PrimitiveFormula, PrimitiveFormulaHash> index_;
};

inline std::string to_string(const PrimitiveSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& p : s) {
    out += first ? " " : ", ";
    out += to_string(p);
    first = false;
  }
  return out + (first ? "}" : " }");
}

// ---------------------------------------------------------------------------
// Parsing and formatting

namespace detail {

struct SideItem {
  std::string text;
  bool variable = false;
  std::size_t line = 0;
  std::size_t column = 0;
};

inline std::pair<Path, Term> finish_side(std::vector<SideItem>& items,
                                         const Cursor& cur) {
  if (items.empty()) cur.fail("expected a term");
  Path path;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    if (items[i].variable)
      throw ParseError("variable ?" + items[i].text +
                           " may only appear as the final term of a side",
                       items[i].line, items[i].column);
    path.push_back(std::move(items[i].text));
  }
  SideItem& last = items.back();
  Term term = last.variable ? Term::variable(std::move(last.text))
                            : Term::constant(std::move(last.text));
  items.clear();
  return {std::move(path), std::move(term)};
}

}  // namespace detail

inline Formula parse_formula(std::string_view text) {
  detail::Cursor cur(text);
  Formula out;
  std::vector<detail::SideItem> items;
  Equation eq;
  bool have_left = false;

  auto close_equation = [&] {
    if (!have_left) cur.fail("expected '=' in equation");
    auto [path, term] = detail::finish_side(items, cur);
    eq.right_path = std::move(path);
    eq.right = std::move(term);
    out.conjuncts.push_back(std::move(eq));
    eq = Equation{};
    have_left = false;
  };

  cur.skip_space('#');
  if (cur.at_end()) cur.fail("empty formula");
  while (true) {
    cur.skip_space('#');
    if (cur.at_end()) {
      close_equation();
      break;
    }
    char c = cur.peek();
    if (c == '=') {
      if (have_left) cur.fail("second '=' in one equation");
      auto [path, term] = detail::finish_side(items, cur);
      eq.left_path = std::move(path);
      eq.left = std::move(term);
      have_left = true;
      cur.get();
    } else if (c == '&') {
      close_equation();
      cur.get();
      cur.skip_space('#');
      if (cur.at_end()) cur.fail("expected an equation after '&'");
    } else if (c == '?') {
      detail::SideItem item{"", true, cur.line(), cur.column()};
      cur.get();
      item.text = cur.read_symbol();
      if (item.text.empty()) cur.fail("expected a variable name after '?'");
      items.push_back(std::move(item));
    } else if (detail::is_symbol_char(c)) {
      detail::SideItem item{"", false, cur.line(), cur.column()};
      item.text = cur.read_symbol();
      items.push_back(std::move(item));
    } else {
      cur.fail(std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

inline std::string format_equation(const Equation& eq) {
  std::string out;
  for (const auto& a : eq.left_path) out += a + " ";
  out += to_string(eq.left) + " = ";
  for (const auto& a : eq.right_path) out += a + " ";
  return out + to_string(eq.right);
}

inline std::string format_formula(const Formula& f) {
  std::string out;
  for (std::size_t i = 0; i < f.conjuncts.size(); ++i) {
    if (i) out += " & ";
    out += format_equation(f.conjuncts[i]);
  }
  return out;
}

// Reads a set written in formula syntax where every equation already has
// primitive shape (`s = t` or `f s = t`).
inline PrimitiveSet parse_primitive_set(std::string_view text) {
  PrimitiveSet out;
  for (auto& eq : parse_formula(text).conjuncts) {
    if (!eq.right_path.empty() || eq.left_path.size() > 1)
      throw ParseError("not a primitive formula: " + format_equation(eq), 1, 1);
    if (eq.left_path.empty())
      out.insert(PrimitiveFormula::term_eq(std::move(eq.left),
                                           std::move(eq.right)));
    else
      out.insert(PrimitiveFormula::feature_eq(std::move(eq.left_path[0]),
                                              std::move(eq.left),
                                              std::move(eq.right)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Helpers over formulas

inline Formula conjoin(Formula a, const Formula& b) {
  a.conjuncts.insert(a.conjuncts.end(), b.conjuncts.begin(), b.conjuncts.end());
  return a;
}

// Variable names in order of first occurrence.
inline std::vector<std::string> variables_of(const Formula& f) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  auto visit = [&](const Term& t) {
    if (t.is_variable() && seen.insert(t.name()).second) out.push_back(t.name());
  };
  for (const auto& eq : f.conjuncts) {
    visit(eq.left);
    visit(eq.right);
  }
  return out;
}

inline std::size_t total_path_length(const Formula& f) {
  std::size_t n = 0;
  for (const auto& eq : f.conjuncts) n += eq.left_path.size() + eq.right_path.size();
  return n;
}

// Renames variables through `rename`; constants are untouched.
inline Formula rename_variables(
    const Formula& f,
    const std::function<std::string(const std::string&)>& rename) {
  Formula out = f;
  for (auto& eq : out.conjuncts) {
    if (eq.left.is_variable()) eq.left = Term::variable(rename(eq.left.name()));
    if (eq.right.is_variable()) eq.right = Term::variable(rename(eq.right.name()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flattening

// Names minted by `transform` start with '%', which the parser rejects, so
// they never collide with user variables.
inline bool is_fresh_name(std::string_view name) {
  return !name.empty() && name.front() == '%';
}

namespace detail {

class FreshNames {
 public:
  Term next() { return Term::variable("%" + std::to_string(counter_++)); }

 private:
  std::size_t counter_ = 0;
};

// f_n ... f_1 s = y  ~>  { s = y0, f_1 y0 = y1, ..., f_n y_{n-1} = y_n, y_n = y }
inline void unroll_side(const Path& path, const Term& s, const Term& y,
                        FreshNames& fresh, PrimitiveSet& out) {
  Term prev = fresh.next();
  out.insert(PrimitiveFormula::term_eq(s, prev));
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    Term next = fresh.next();
    out.insert(PrimitiveFormula::feature_eq(*it, prev, next));
    prev = std::move(next);
  }
  out.insert(PrimitiveFormula::term_eq(std::move(prev), y));
}

}  // namespace detail

// Splits every conjunct through a fresh middle variable and unrolls both
// paths one attribute at a time. The result has at most
// total_path_length(f) + 4 * |conjuncts| members.
inline PrimitiveSet transform(const Formula& f) {
  PrimitiveSet out;
  detail::FreshNames fresh;
  for (const auto& eq : f.conjuncts) {
    Term y = fresh.next();
    detail::unroll_side(eq.left_path, eq.left, y, fresh, out);
    detail::unroll_side(eq.right_path, eq.right, y, fresh, out);
  }
  return out;
}

}  // namespace fgram
