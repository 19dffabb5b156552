#pragma once

// Generators and independent oracles shared by the unit suites and the
// acceptance binary.

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "fgram/fgram.hpp"

namespace fgram::testing {

inline std::string data_path(const std::string& rel) { return std::string(FGRAM_DATA_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

using Rng = std::mt19937_64;

template <class T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

inline bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// ---------------------------------------------------------------------------
// Formulas

struct FormulaShape {
  std::vector<std::string> variables{"x", "y", "z", "w"};
  std::vector<std::string> constants{"a", "b"};
  std::vector<std::string> attributes{"f", "g", "h"};
  int max_conjuncts = 5;
  int max_path = 3;
  double constant_rate = 0.25;
};

inline Term random_term(Rng& rng, const FormulaShape& s) {
  if (chance(rng, s.constant_rate)) return Term::constant(pick(rng, s.constants));
  return Term::variable(pick(rng, s.variables));
}

inline Path random_path(Rng& rng, const FormulaShape& s) {
  Path p(uniform(rng, 0, s.max_path));
  for (auto& a : p) a = pick(rng, s.attributes);
  return p;
}

inline Formula random_formula(Rng& rng, const FormulaShape& s = {}) {
  Formula f;
  int n = uniform(rng, 1, s.max_conjuncts);
  for (int i = 0; i < n; ++i)
    f.conjuncts.push_back({random_path(rng, s), random_term(rng, s), random_path(rng, s), random_term(rng, s)});
  return f;
}

// A random formula whose every variable hangs off `?r` through a dedicated
// attribute, so all of them are reachable in the described graph.
inline Formula rooted_random_formula(Rng& rng, const FormulaShape& s = {}) {
  Formula f;
  Term r = Term::variable("r");
  for (const auto& v : s.variables) f.conjuncts.push_back({{"link_" + v}, r, {}, Term::variable(v)});
  Formula body = random_formula(rng, s);
  f.conjuncts.insert(f.conjuncts.end(), body.conjuncts.begin(), body.conjuncts.end());
  return f;
}

inline PrimitiveSet random_primitive_set(Rng& rng, int max_size, int variables = 8) {
  std::vector<std::string> vars, consts{"a", "b", "c"}, attrs{"f", "g", "h"};
  for (int i = 0; i < variables; ++i) vars.push_back("v" + std::to_string(i));
  auto term = [&] { return chance(rng, 0.2) ? Term::constant(pick(rng, consts)) : Term::variable(pick(rng, vars)); };
  PrimitiveSet p;
  int n = uniform(rng, 0, max_size);
  for (int i = 0; i < n; ++i) {
    if (chance(rng, 0.5))
      p.insert(PrimitiveFormula::feature_eq(pick(rng, attrs), term(), term()));
    else
      p.insert(PrimitiveFormula::term_eq(term(), term()));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Graph semantics oracle

// Follows `path` (rightmost attribute first) from the value of `t`.
inline std::optional<Target> follow(const FeatureGraph& g, const std::map<std::string, Target>& valuation,
                                    const Path& path, const Term& t) {
  std::optional<Target> at;
  if (t.is_constant()) {
    at = Constant{t.name()};
  } else {
    auto it = valuation.find(t.name());
    if (it == valuation.end()) return std::nullopt;
    at = it->second;
  }
  for (auto a = path.rbegin(); a != path.rend(); ++a) {
    const NodeId* n = std::get_if<NodeId>(&*at);
    if (!n) return std::nullopt;
    std::optional<Target> next;
    for (const auto& e : g.edges)
      if (e.from == *n && e.label == *a) next = e.to;
    if (!next) return std::nullopt;
    at = next;
  }
  return at;
}

inline bool satisfies(const FeatureGraph& g, const std::map<std::string, Target>& valuation, const Equation& eq) {
  auto l = follow(g, valuation, eq.left_path, eq.left);
  auto r = follow(g, valuation, eq.right_path, eq.right);
  return l && r && *l == *r;
}

// ---------------------------------------------------------------------------
// Random graphs

struct GraphShape {
  int max_nodes = 10;
  std::vector<std::string> labels{"f", "g", "h", "k"};
  std::vector<std::string> constants{"a", "b", "c"};
  double extra_edge_rate = 0.35;
  double leaf_rate = 0.3;
};

// A valid acyclic rooted graph: node i > 0 gets a tree edge from some j < i,
// further forward edges and constant leaves are added at random. Node ids are
// scattered so they are not consecutive.
inline FeatureGraph random_graph(Rng& rng, const GraphShape& s = {}) {
  int n = uniform(rng, 1, s.max_nodes);
  std::vector<NodeId> ids(n);
  std::set<std::uint32_t> used;
  for (auto& id : ids) {
    std::uint32_t v;
    do v = static_cast<std::uint32_t>(uniform(rng, 0, 1000)); while (!used.insert(v).second);
    id = NodeId{v};
  }
  FeatureGraph g;
  g.root = ids[0];
  g.nodes = ids;
  std::vector<std::set<std::string>> taken(n);
  auto free_label = [&](int from) -> std::optional<std::string> {
    std::vector<std::string> avail;
    for (const auto& l : s.labels)
      if (!taken[from].count(l)) avail.push_back(l);
    if (avail.empty()) return std::nullopt;
    std::string l = pick(rng, avail);
    taken[from].insert(l);
    return l;
  };
  for (int i = 1; i < n; ++i) {
    std::vector<int> parents;
    for (int j = 0; j < i; ++j)
      if (taken[j].size() < s.labels.size()) parents.push_back(j);
    int j = pick(rng, parents);
    g.edges.push_back({ids[j], *free_label(j), ids[i]});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (chance(rng, s.extra_edge_rate / n))
        if (auto l = free_label(i)) g.edges.push_back({ids[i], *l, ids[j]});
  for (int i = 0; i < n; ++i)
    while (chance(rng, s.leaf_rate))
      if (auto l = free_label(i))
        g.edges.push_back({ids[i], *l, Constant{pick(rng, s.constants)}});
      else
        break;
  std::shuffle(g.edges.begin(), g.edges.end(), rng);
  return g;
}

// Same graph under a random renaming of node ids.
inline FeatureGraph relabel(Rng& rng, const FeatureGraph& g) {
  if (g.is_atomic()) return g;
  std::vector<std::uint32_t> fresh(g.nodes.size());
  std::iota(fresh.begin(), fresh.end(), 5000u);
  std::shuffle(fresh.begin(), fresh.end(), rng);
  std::map<NodeId, NodeId> m;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) m[g.nodes[i]] = NodeId{fresh[i]};
  FeatureGraph out;
  out.root = m.at(g.root);
  for (NodeId n : g.nodes) out.nodes.push_back(m.at(n));
  for (const auto& e : g.edges) {
    Target to = e.to;
    if (const auto* n = std::get_if<NodeId>(&to)) to = m.at(*n);
    out.edges.push_back({m.at(e.from), e.label, to});
  }
  std::shuffle(out.nodes.begin(), out.nodes.end(), rng);
  std::shuffle(out.edges.begin(), out.edges.end(), rng);
  return out;
}

// Isomorphism by trying every root-preserving bijection of inner nodes.
inline bool brute_force_isomorphic(const FeatureGraph& a, const FeatureGraph& b) {
  if (a.is_atomic() || b.is_atomic()) return a.atom == b.atom;
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
  auto key = [](const Edge& e) {
    std::string to = std::holds_alternative<NodeId>(e.to) ? "n" + std::to_string(std::get<NodeId>(e.to).value)
                                                          : "c" + std::get<Constant>(e.to).name;
    return std::to_string(e.from.value) + "|" + e.label + "|" + to;
  };
  std::set<std::string> target;
  for (const auto& e : b.edges) target.insert(key(e));
  std::vector<NodeId> images = b.nodes;
  std::sort(images.begin(), images.end());
  do {
    std::map<NodeId, NodeId> m;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) m[a.nodes[i]] = images[i];
    if (m.at(a.root) != b.root) continue;
    std::set<std::string> mapped;
    for (const auto& e : a.edges) {
      Target to = e.to;
      if (const auto* n = std::get_if<NodeId>(&to)) to = m.at(*n);
      mapped.insert(key({m.at(e.from), e.label, to}));
    }
    if (mapped == target) return true;
  } while (std::next_permutation(images.begin(), images.end()));
  return false;
}

// Every rooted graph over nodes {0..k-1} (k <= max_nodes) whose node i only
// points forward, with labels {f, g} and the single constant `a`, that is
// reachable from node 0.
inline std::vector<FeatureGraph> all_small_graphs(int max_nodes) {
  const std::vector<std::string> labels{"f", "g"};
  std::vector<FeatureGraph> out;
  out.push_back(FeatureGraph::atomic("a"));
  for (int k = 1; k <= max_nodes; ++k) {
    // slot (node, label) -> choice in {none, a, node j > node}
    std::vector<std::pair<int, std::string>> slots;
    std::vector<int> arity;
    for (int i = 0; i < k; ++i)
      for (const auto& l : labels) {
        slots.emplace_back(i, l);
        arity.push_back(2 + (k - 1 - i));
      }
    std::vector<int> choice(slots.size(), 0);
    while (true) {
      FeatureGraph g;
      g.root = NodeId{0};
      for (int i = 0; i < k; ++i) g.nodes.push_back(NodeId{static_cast<std::uint32_t>(i)});
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (choice[s] == 0) continue;
        auto [from, label] = slots[s];
        Target to = choice[s] == 1 ? Target{Constant{"a"}}
                                   : Target{NodeId{static_cast<std::uint32_t>(from + choice[s] - 1)}};
        g.edges.push_back({NodeId{static_cast<std::uint32_t>(from)}, label, to});
      }
      if (validate_graph(g)) out.push_back(g);
      std::size_t s = 0;
      while (s < choice.size() && ++choice[s] == arity[s]) choice[s++] = 0;
      if (s == choice.size()) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SAT

inline CnfFormula random_cnf(Rng& rng, int max_vars, int max_clauses, int max_literals) {
  CnfFormula f;
  int m = uniform(rng, 0, max_clauses);
  for (int i = 0; i < m; ++i) {
    Clause c;
    int k = uniform(rng, 1, max_literals);
    for (int j = 0; j < k; ++j)
      c.literals.push_back({static_cast<std::uint32_t>(uniform(rng, 1, max_vars)), chance(rng, 0.5)});
    f.clauses.push_back(std::move(c));
  }
  return f;
}

// All non-empty clauses of distinct literals over variables 1..3 with at most
// three literals, each listed once in canonical order.
inline std::vector<Clause> all_small_clauses() {
  std::vector<Literal> lits;
  for (std::uint32_t v = 1; v <= 3; ++v) {
    lits.push_back({v, false});
    lits.push_back({v, true});
  }
  std::vector<Clause> out;
  for (unsigned mask = 1; mask < (1u << lits.size()); ++mask) {
    if (__builtin_popcount(mask) > 3) continue;
    Clause c;
    for (std::size_t i = 0; i < lits.size(); ++i)
      if (mask & (1u << i)) c.literals.push_back(lits[i]);
    out.push_back(std::move(c));
  }
  return out;
}

// Every sequence of 0..3 clauses drawn from all_small_clauses().
inline std::vector<CnfFormula> desk_scale_corpus() {
  std::vector<Clause> clauses = all_small_clauses();
  std::vector<CnfFormula> out{CnfFormula{}};
  for (const auto& a : clauses) out.push_back({{a}});
  for (const auto& a : clauses)
    for (const auto& b : clauses) out.push_back({{a, b}});
  for (const auto& a : clauses)
    for (const auto& b : clauses)
      for (const auto& c : clauses) out.push_back({{a, b, c}});
  return out;
}

// Truth-table evaluation written independently of evaluate().
inline bool oracle_satisfiable(const CnfFormula& f) {
  std::uint32_t max_var = 0;
  for (const auto& c : f.clauses)
    for (const auto& l : c.literals) max_var = std::max(max_var, l.var);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << max_var); ++bits) {
    bool all = true;
    for (const auto& c : f.clauses) {
      bool any = false;
      for (const auto& l : c.literals) any = any || (((bits >> (l.var - 1)) & 1) != 0) != l.negated;
      all = all && any;
    }
    if (all) return true;
  }
  return false;
}

inline const std::regex& backbone_regex() {
  static const std::regex re("^(#((0|1)*(p|q))+)*$");
  return re;
}

// Checks the per-clause shape of an accepted derivation of the builtin
// grammar: every `#` block selects exactly one literal through one contiguous
// run of T-steps ending in T -> p A or T -> q A. Returns the number of blocks.
inline std::optional<std::size_t> clause_blocks(const UnificationGrammar& g, const Derivation& d) {
  std::size_t blocks = 0;
  int selections = -1;
  bool in_t = false, t_done = false;
  for (const auto& s : d.steps) {
    const AnnotatedRule& r = g.rules[s.rule_index];
    const auto& ts = r.body().terminals;
    bool hash = !ts.empty() && ts.front() == "#";
    if (hash) {
      if (selections == 0 || selections > 1) return std::nullopt;
      ++blocks;
      selections = 0;
      in_t = t_done = false;
    }
    bool tail_t = r.body().tail && *r.body().tail == "T";
    if (r.head() == "T") {
      if (t_done) return std::nullopt;
      in_t = true;
      if (!tail_t) {
        ++selections;
        t_done = true;
        in_t = false;
      }
    } else if (tail_t && (in_t || t_done)) {
      return std::nullopt;
    }
  }
  if (selections == 0 || selections > 1) return std::nullopt;
  return blocks;
}

}  // namespace fgram::testing
