#pragma once

// Recognition for annotated right-linear grammars.
//
// A derivation is a chain of rules S -> ... X1, X1 -> ... X2, ..., Xk -> ...
// Step i binds the rule's ?x0 to node variable ?n<i> and its ?x1 to ?n<i+1>.
// A string is in the language iff some derivation yields it and the conjoined,
// instantiated annotations describe an acyclic feature-graph.
//
// The search is depth-first in grammar rule order. Equalities are kept in an
// undoable union-find store so that clashes prune a branch as soon as they
// arise; acyclicity is only decided once a complete derivation is found, by
// running feature_graph_sat on the whole derivation formula.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fgram/formula.hpp"
#include "fgram/grammar.hpp"
#include "fgram/graph.hpp"
#include "fgram/solver.hpp"

namespace fgram {

struct DerivationStep {
  std::size_t rule_index = 0;
  std::string node_var;
  std::optional<std::string> child_var;

  friend bool operator==(const DerivationStep&, const DerivationStep&) = default;
};

struct Derivation {
  std::vector<DerivationStep> steps;

  std::vector<std::size_t> rule_indices() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps) out.push_back(s.rule_index);
    return out;
  }

  friend bool operator==(const Derivation&, const Derivation&) = default;
};

inline std::string node_variable(std::size_t i) { return "n" + std::to_string(i); }

// Canonical variable naming for a rule-index sequence. Indices are not checked
// here; see check_derivation.
inline Derivation make_derivation(const UnificationGrammar& g, const std::vector<std::size_t>& rules) {
  Derivation d;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    DerivationStep s{rules[i], node_variable(i), std::nullopt};
    if (rules[i] < g.rules.size() && g.rules[rules[i]].body().tail) s.child_var = node_variable(i + 1);
    d.steps.push_back(std::move(s));
  }
  return d;
}

// One-line certificate text: `d: 3 7 12`, 0-based rule indices in grammar order.
inline std::string format_certificate(const Derivation& d) {
  std::string out = "d:";
  for (const auto& s : d.steps) out += " " + std::to_string(s.rule_index);
  return out;
}

inline Derivation parse_certificate(const UnificationGrammar& g, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  if (!(in >> tag) || tag != "d:") throw ParseError("certificate must start with 'd:'", 1, 1);
  std::vector<std::size_t> rules;
  std::string tok;
  while (in >> tok) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9)
      throw ParseError("bad rule index '" + tok + "'", 1, 1);
    rules.push_back(std::stoul(tok));
  }
  return make_derivation(g, rules);
}

// Throws std::invalid_argument unless `d` is a complete, well-chained
// derivation from the start symbol.
inline void check_derivation(const UnificationGrammar& g, const Derivation& d) {
  if (d.steps.empty()) throw std::invalid_argument("empty derivation");
  std::set<std::string> names;
  for (std::size_t i = 0; i < d.steps.size(); ++i) {
    const DerivationStep& s = d.steps[i];
    if (s.rule_index >= g.rules.size())
      throw std::invalid_argument("rule index " + std::to_string(s.rule_index) + " out of range");
    const AnnotatedRule& r = g.rules[s.rule_index];
    const NonTerminal& expected = i == 0 ? g.start : *g.rules[d.steps[i - 1].rule_index].body().tail;
    if (r.head() != expected)
      throw std::invalid_argument("step " + std::to_string(i) + " rewrites " + r.head() + ", expected " +
                                  expected);
    bool last = i + 1 == d.steps.size();
    if (last && r.body().tail) throw std::invalid_argument("derivation ends on a rule with a nonterminal");
    if (!last && !r.body().tail) throw std::invalid_argument("derivation continues after a terminal rule");
    if (r.body().tail.has_value() != s.child_var.has_value())
      throw std::invalid_argument("step " + std::to_string(i) + " child variable does not match its rule");
    if (s.child_var && (last || *s.child_var != d.steps[i + 1].node_var))
      throw std::invalid_argument("step " + std::to_string(i) + " is not chained to its successor");
    if (!names.insert(s.node_var).second) throw std::invalid_argument("node variable reused");
  }
}

inline std::vector<Terminal> derivation_yield(const UnificationGrammar& g, const Derivation& d) {
  std::vector<Terminal> out;
  for (const auto& s : d.steps) {
    const auto& ts = g.rules.at(s.rule_index).body().terminals;
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

// Conjunction of the instantiated annotations, in step order.
inline Formula derivation_formula(const UnificationGrammar& g, const Derivation& d) {
  check_derivation(g, d);
  Formula out;
  for (const auto& s : d.steps) {
    const AnnotatedRule& r = g.rules[s.rule_index];
    if (!r.annotation) continue;
    out = conjoin(std::move(out), rename_variables(*r.annotation, [&s](const std::string& v) {
                    return v == kHeadVariable ? s.node_var : *s.child_var;
                  }));
  }
  if (out.conjuncts.empty()) {
    Term n = Term::variable(d.steps.front().node_var);
    out.conjuncts.push_back({{}, n, {}, n});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Incremental constraint store

namespace detail {

// Union-find over terms with per-class constant and feature table. Every
// mutation is trailed so the search can backtrack to a mark.
class ConstraintStore {
 public:
  int new_term(int constant = -1) {
    parent_.push_back(static_cast<int>(parent_.size()));
    size_.push_back(1);
    constant_.push_back(constant);
    features_.emplace_back();
    trail_.push_back({Op::kNewTerm, 0, 0});
    return parent_.back();
  }

  std::size_t mark() const { return trail_.size(); }

  void undo(std::size_t to) {
    while (trail_.size() > to) {
      const Entry e = trail_.back();
      trail_.pop_back();
      switch (e.op) {
        case Op::kNewTerm:
          parent_.pop_back();
          size_.pop_back();
          constant_.pop_back();
          features_.pop_back();
          break;
        case Op::kParent:
          parent_[e.a] = e.a;
          size_[e.b] -= size_[e.a];
          break;
        case Op::kConstant:
          constant_[e.a] = -1;
          break;
        case Op::kFeature:
          features_[e.a].pop_back();
          break;
      }
    }
  }

  // False on clash.
  bool add_eq(int a, int b) {
    pending_.clear();
    pending_.emplace_back(a, b);
    while (!pending_.empty()) {
      auto [x, y] = pending_.back();
      pending_.pop_back();
      int rx = find(x), ry = find(y);
      if (rx == ry) continue;
      if (size_[rx] < size_[ry]) std::swap(rx, ry);
      int cx = constant_[rx], cy = constant_[ry];
      if (cx >= 0 && cy >= 0 && cx != cy) return false;
      if ((cx >= 0 && !features_[ry].empty()) || (cy >= 0 && !features_[rx].empty())) return false;
      parent_[ry] = rx;
      size_[rx] += size_[ry];
      trail_.push_back({Op::kParent, ry, rx});
      if (cx < 0 && cy >= 0) {
        constant_[rx] = cy;
        trail_.push_back({Op::kConstant, rx, 0});
      }
      for (const auto& [f, t] : features_[ry]) {
        int existing = feature_of(rx, f);
        if (existing >= 0) {
          pending_.emplace_back(existing, t);
        } else {
          features_[rx].emplace_back(f, t);
          trail_.push_back({Op::kFeature, rx, 0});
        }
      }
    }
    return true;
  }

  // f s = t. False on clash.
  bool add_feature(int f, int s, int t) {
    int rs = find(s);
    if (constant_[rs] >= 0) return false;
    int existing = feature_of(rs, f);
    if (existing >= 0) return add_eq(existing, t);
    features_[rs].emplace_back(f, t);
    trail_.push_back({Op::kFeature, rs, 0});
    return true;
  }

 private:
  enum class Op : std::uint8_t { kNewTerm, kParent, kConstant, kFeature };
  struct Entry {
    Op op;
    int a;
    int b;
  };

  int find(int x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }
  int feature_of(int rep, int f) const {
    for (const auto& [g, t] : features_[rep])
      if (g == f) return t;
    return -1;
  }

  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> constant_;
  std::vector<std::vector<std::pair<int, int>>> features_;
  std::vector<Entry> trail_;
  std::vector<std::pair<int, int>> pending_;
};

// A rule annotation flattened once, with operands relative to the step.
struct CompiledAnnotation {
  enum class Kind : std::uint8_t { kHead, kTail, kLocal, kConstant };
  struct Operand {
    Kind kind;
    int index;  // local number or constant term
  };
  struct Prim {
    int feature;  // -1 for s = t
    Operand s;
    Operand t;
  };
  std::vector<Prim> prims;
  int locals = 0;
};

}  // namespace detail

// Raised when a derivation would exceed the safety bound of 3|w| + 3 steps.
class DerivationBoundExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecognizeOptions {
  std::size_t max_states = 0;  // 0: unlimited
};

enum class Outcome : std::uint8_t { kAccepted, kRejected, kBudgetExhausted };

struct RecognitionResult {
  bool accepted = false;
  Outcome outcome = Outcome::kRejected;
  std::optional<Derivation> derivation;
  std::optional<SatVerdict> solution;  // the derivation's solved constraints
  std::size_t states_explored = 0;
};

namespace detail {

class Recognizer {
 public:
  Recognizer(const UnificationGrammar& g, std::vector<Terminal> input, RecognizeOptions options)
      : g_(g), input_(std::move(input)), options_(options) {
    bound_ = 3 * input_.size() + 3;
    for (std::size_t i = 0; i < g_.rules.size(); ++i) by_head_[g_.rules[i].head()].push_back(i);
    compile();
  }

  RecognitionResult run() {
    RecognitionResult out;
    int root = store_.new_term();
    base_mark_ = store_.mark();
    bool found = search(0, g_.start, root);
    out.states_explored = states_;
    if (found) {
      out.accepted = true;
      out.outcome = Outcome::kAccepted;
      out.derivation = make_derivation(g_, steps_);
      out.solution = std::move(solution_);
    } else {
      out.outcome = exhausted_ ? Outcome::kBudgetExhausted : Outcome::kRejected;
    }
    return out;
  }

 private:
  void compile() {
    std::unordered_map<std::string, int> attrs;
    for (const auto& r : g_.rules) {
      CompiledAnnotation c;
      if (r.annotation) {
        std::unordered_map<std::string, int> locals;
        auto operand = [&](const Term& t) -> CompiledAnnotation::Operand {
          using K = CompiledAnnotation::Kind;
          if (t.is_constant()) return {K::kConstant, constant_term(t.name())};
          if (t.name() == kHeadVariable) return {K::kHead, 0};
          if (t.name() == kTailVariable) return {K::kTail, 0};
          auto [it, fresh] = locals.emplace(t.name(), static_cast<int>(locals.size()));
          return {K::kLocal, it->second};
        };
        for (const auto& p : transform(*r.annotation)) {
          int f = -1;
          if (p.feature) f = attrs.emplace(*p.feature, static_cast<int>(attrs.size())).first->second;
          c.prims.push_back({f, operand(p.subject), operand(p.object)});
        }
        c.locals = static_cast<int>(locals.size());
      }
      compiled_.push_back(std::move(c));
    }
  }

  int constant_term(const std::string& name) {
    auto it = constants_.find(name);
    if (it != constants_.end()) return it->second;
    int id = store_.new_term(static_cast<int>(constants_.size()));
    constants_.emplace(name, id);
    return id;
  }

  bool instantiate(std::size_t rule, int head, int tail) {
    const CompiledAnnotation& c = compiled_[rule];
    locals_.clear();
    for (int i = 0; i < c.locals; ++i) locals_.push_back(store_.new_term());
    auto resolve = [&](const CompiledAnnotation::Operand& o) {
      using K = CompiledAnnotation::Kind;
      switch (o.kind) {
        case K::kHead: return head;
        case K::kTail: return tail;
        case K::kLocal: return locals_[o.index];
        case K::kConstant: return o.index;
      }
      return -1;
    };
    for (const auto& p : c.prims) {
      int s = resolve(p.s), t = resolve(p.t);
      bool ok = p.feature < 0 ? store_.add_eq(s, t) : store_.add_feature(p.feature, s, t);
      if (!ok) return false;
    }
    return true;
  }

  bool accept_complete() {
    Derivation d = make_derivation(g_, steps_);
    SatVerdict v = feature_graph_sat(derivation_formula(g_, d));
    if (!v.yes()) return false;
    solution_ = std::move(v);
    return true;
  }

  bool search(std::size_t pos, const NonTerminal& nt, int node) {
    auto it = by_head_.find(nt);
    if (it == by_head_.end()) return false;
    for (std::size_t r : it->second) {
      const RuleBody& body = g_.rules[r].body();
      const auto& ts = body.terminals;
      if (pos + ts.size() > input_.size() || !std::equal(ts.begin(), ts.end(), input_.begin() + pos))
        continue;
      if (!body.tail && pos + ts.size() != input_.size()) continue;
      if (options_.max_states && states_ >= options_.max_states) {
        exhausted_ = true;
        return false;
      }
      ++states_;
      if (steps_.size() + 1 > bound_)
        throw DerivationBoundExceeded("derivation longer than " + std::to_string(bound_) + " steps");

      std::size_t m = store_.mark();
      int child = body.tail ? store_.new_term() : -1;
      steps_.push_back(r);
      if (instantiate(r, node, child)) {
        if (body.tail ? search(pos + ts.size(), *body.tail, child) : accept_complete()) return true;
      }
      steps_.pop_back();
      store_.undo(m);
      if (exhausted_) return false;
    }
    return false;
  }

  const UnificationGrammar& g_;
  std::vector<Terminal> input_;
  RecognizeOptions options_;
  std::size_t bound_ = 0;
  std::map<NonTerminal, std::vector<std::size_t>> by_head_;
  std::vector<CompiledAnnotation> compiled_;
  std::unordered_map<std::string, int> constants_;
  ConstraintStore store_;
  std::size_t base_mark_ = 0;
  std::vector<int> locals_;
  std::vector<std::size_t> steps_;
  std::optional<SatVerdict> solution_;
  std::size_t states_ = 0;
  bool exhausted_ = false;
};

}  // namespace detail

// Throws GrammarError if the grammar has detours and std::invalid_argument on
// symbols outside the grammar's terminal alphabet.
inline RecognitionResult recognize(const UnificationGrammar& g, std::string_view w,
                                   RecognizeOptions options = {}) {
  RegularGrammar bb = backbone(g);
  if (!check_offline_parsability(bb))
    throw GrammarError("grammar has a unit-rule cycle; recognition would not terminate");
  std::vector<Terminal> input = tokenize_input(w, terminal_alphabet(bb));
  return detail::Recognizer(g, std::move(input), options).run();
}

// Guess-and-check verifier: the derivation must be well formed, yield exactly
// `w`, and its conjoined annotations must describe an acyclic feature-graph.
inline bool verify_certificate(const UnificationGrammar& g, std::string_view w, const Derivation& d) {
  try {
    check_derivation(g, d);
    std::vector<Terminal> input = tokenize_input(w, terminal_alphabet(backbone(g)));
    if (derivation_yield(g, d) != input) return false;
    return feature_graph_sat(derivation_formula(g, d)).yes();
  } catch (const std::invalid_argument&) {
    return false;
  }
}

// Reads the truth assignment encoded under `assign` in the feature-graph of a
// verified derivation of the builtin grammar: each path assign b1..bl v = c
// with a non-empty bit string maps b1..bl to c == "+".
inline std::map<std::string, bool> extract_assignment(const SatVerdict& v, const Derivation& d) {
  if (!v.yes()) throw std::invalid_argument("extract_assignment: derivation constraints are unsatisfiable");
  const FeatureGraph& graph = *v.model;
  std::map<std::string, bool> out;
  auto root = v.valuation.find(d.steps.front().node_var);
  if (graph.is_atomic() || root == v.valuation.end() || !std::holds_alternative<NodeId>(root->second))
    return out;

  auto edge = [&graph](NodeId from, std::string_view label) -> const Target* {
    for (const auto& e : graph.edges)
      if (e.from == from && e.label == label) return &e.to;
    return nullptr;
  };
  const Target* assign = edge(std::get<NodeId>(root->second), "assign");
  if (!assign || !std::holds_alternative<NodeId>(*assign)) return out;

  std::vector<std::pair<NodeId, std::string>> work{{std::get<NodeId>(*assign), ""}};
  while (!work.empty()) {
    auto [n, bits] = work.back();
    work.pop_back();
    if (!bits.empty())
      if (const Target* value = edge(n, "v"))
        if (const auto* c = std::get_if<Constant>(value)) {
          if (c->name == "+") out.emplace(bits, true);
          if (c->name == "-") out.emplace(bits, false);
        }
    for (const char* bit : {"1", "0"})
      if (const Target* next = edge(n, bit))
        if (const auto* id = std::get_if<NodeId>(next)) work.emplace_back(*id, bits + bit);
  }
  return out;
}

inline std::map<std::string, bool> extract_assignment(const UnificationGrammar& g, const Derivation& d) {
  return extract_assignment(feature_graph_sat(derivation_formula(g, d)), d);
}

}  // namespace fgram
