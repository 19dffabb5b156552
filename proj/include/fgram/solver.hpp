#pragma once

// Satisfiability of path-equation formulas over acyclic feature-graphs.
//
// A formula is flattened into primitive formulas, rewritten to solved form by
// four rules, and the solved form is tested for clashes and cycles:
//
//   (1) x = s & P      ->  x = s & P[x := s]    if x occurs in P and x != s
//   (2) a = x & P      ->  x = a & P
//   (3) f x = s & f x = t & P  ->  f x = s & s = t & P
//   (4) s = s & P      ->  P
//
// The rules are confluent up to variable renaming, so the verdict does not
// depend on the order in which they fire. The default order tries 4, 2, 3, 1
// and, within a rule, scans formulas in insertion order.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fgram/formula.hpp"
#include "fgram/graph.hpp"

namespace fgram {

struct RuleOrder {
  enum class Kind : std::uint8_t { kPriority, kRandom };

  Kind kind = Kind::kPriority;
  std::uint64_t seed = 0;

  static RuleOrder priority() { return {}; }
  static RuleOrder random(std::uint64_t seed) { return {Kind::kRandom, seed}; }
};

struct RuleFiring {
  int rule = 0;  // 1..4
  std::vector<PrimitiveFormula> consumed;
};

struct SimplifyOptions {
  RuleOrder order;
  bool record_trace = false;
};

// A set on which none of the four rules applies.
struct SimplifiedSet {
  PrimitiveSet formulas;
  std::size_t applications = 0;
  std::vector<RuleFiring> trace;
};

namespace detail {

// Interned rewriting engine behind simplify(). Formulas live in slots whose
// order is the insertion order; a rewritten formula keeps its slot.
class SimplifyEngine {
 public:
  explicit SimplifyEngine(const PrimitiveSet& input) {
    for (const auto& p : input) {
      Slot s{p.feature ? attr_id(*p.feature) : -1, term_id(p.subject),
             term_id(p.object), true};
      add(s);
    }
  }

  SimplifiedSet run(const SimplifyOptions& options) {
    SimplifiedSet out;
    std::mt19937_64 rng(options.order.seed);
    while (true) {
      std::optional<Firing> f = options.order.kind == RuleOrder::Kind::kPriority
                                    ? find_priority()
                                    : find_random(rng);
      if (!f) break;
      if (options.record_trace) out.trace.push_back(describe(*f));
      apply(*f);
      ++out.applications;
    }
    for (const auto& s : slots_)
      if (s.alive) out.formulas.insert(decode(s));
    return out;
  }

 private:
  struct Slot {
    int feat;  // -1 for s = t
    int s;
    int t;
    bool alive;
  };
  struct Firing {
    int rule;
    std::size_t i;
    std::size_t j;  // rule 3 only
  };

  // -- interning -----------------------------------------------------------

  int term_id(const Term& t) {
    auto& table = t.is_variable() ? var_ids_ : const_ids_;
    auto [it, fresh] = table.emplace(t.name(), static_cast<int>(terms_.size()));
    if (fresh) {
      terms_.push_back(t);
      occ_.push_back(0);
      mentions_.emplace_back();
    }
    return it->second;
  }
  int attr_id(const Attribute& a) {
    auto [it, fresh] = attr_ids_.emplace(a, static_cast<int>(attrs_.size()));
    if (fresh) attrs_.push_back(a);
    return it->second;
  }
  bool is_var(int term) const { return terms_[term].is_variable(); }

  PrimitiveFormula decode(const Slot& s) const {
    if (s.feat < 0) return PrimitiveFormula::term_eq(terms_[s.s], terms_[s.t]);
    return PrimitiveFormula::feature_eq(attrs_[s.feat], terms_[s.s], terms_[s.t]);
  }

  static std::uint64_t key(const Slot& s) {
    return (static_cast<std::uint64_t>(s.feat + 1) << 42) |
           (static_cast<std::uint64_t>(s.s) << 21) | static_cast<std::uint64_t>(s.t);
  }
  static std::uint64_t feat_key(const Slot& s) {
    return (static_cast<std::uint64_t>(s.feat) << 32) | static_cast<std::uint32_t>(s.s);
  }

  // -- slot bookkeeping ----------------------------------------------------

  void index(std::size_t i) {
    const Slot& s = slots_[i];
    members_.emplace(key(s), i);
    mentions_[s.s].push_back(i);
    if (s.t != s.s) mentions_[s.t].push_back(i);
    count(s.s);
    if (s.t != s.s) count(s.t);
    if (s.feat >= 0) {
      auto& list = by_feature_[feat_key(s)];
      list.push_back(i);
      if (list.size() == 2) merge_queue_.push(list.front());
      if (list.size() >= 2 && is_var(s.s)) merge_queue_.push(i);
    }
    if (applies4(s)) trivial_queue_.push(i);
    if (applies2(s)) orient_queue_.push(i);
    if (applies1(s)) bind_queue_.push(i);
  }

  // Bumps the occurrence count of a term; reaching two can enable rule 1 on
  // bindings of that term.
  void count(int term) {
    if (++occ_[term] != 2) return;
    for (std::size_t k : mentions_[term])
      if (slots_[k].alive && applies1(slots_[k]) && slots_[k].s == term) bind_queue_.push(k);
  }

  void unindex(std::size_t i) {
    const Slot& s = slots_[i];
    members_.erase(key(s));
    --occ_[s.s];
    if (s.t != s.s) --occ_[s.t];
    if (s.feat >= 0) {
      auto& list = by_feature_[feat_key(s)];
      for (std::size_t k = 0; k < list.size(); ++k)
        if (list[k] == i) {
          list[k] = list.back();
          list.pop_back();
          break;
        }
    }
  }

  void add(Slot s) {
    if (s.s >= (1 << 21) || s.t >= (1 << 21))
      throw std::length_error("simplify: too many distinct terms");
    if (members_.count(key(s))) return;
    slots_.push_back(s);
    index(slots_.size() - 1);
  }

  void remove(std::size_t i) {
    unindex(i);
    slots_[i].alive = false;
  }

  // Rewrites slot i in place; it dies if the new content is already present.
  void replace(std::size_t i, int feat, int s, int t) {
    unindex(i);
    Slot next{feat, s, t, true};
    if (members_.count(key(next))) {
      slots_[i].alive = false;
      return;
    }
    slots_[i] = next;
    index(i);
  }

  // -- rule applicability --------------------------------------------------

  bool applies4(const Slot& s) const { return s.feat < 0 && s.s == s.t; }
  bool applies2(const Slot& s) const {
    return s.feat < 0 && !is_var(s.s) && is_var(s.t);
  }
  bool applies1(const Slot& s) const {
    return s.feat < 0 && is_var(s.s) && s.s != s.t && occ_[s.s] >= 2;
  }
  // Partner for rule 3, or npos.
  std::size_t merge_partner(std::size_t i) const {
    const Slot& s = slots_[i];
    if (s.feat < 0 || !is_var(s.s)) return npos;
    auto it = by_feature_.find(feat_key(s));
    std::size_t best = npos;
    for (std::size_t j : it->second)
      if (j != i && j < best) best = j;
    return best;
  }

  // Queues hold every slot a rule might apply to, plus stale entries that are
  // dropped when they reach the top. Ties go to the lowest slot.
  using SlotQueue = std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>;

  template <typename Pred>
  std::optional<std::size_t> first(SlotQueue& q, Pred applies) {
    while (!q.empty()) {
      std::size_t i = q.top();
      if (slots_[i].alive && applies(i)) return i;
      q.pop();
    }
    return std::nullopt;
  }

  std::optional<Firing> find_priority() {
    if (auto i = first(trivial_queue_, [&](std::size_t k) { return applies4(slots_[k]); }))
      return Firing{4, *i, 0};
    if (auto i = first(orient_queue_, [&](std::size_t k) { return applies2(slots_[k]); }))
      return Firing{2, *i, 0};
    if (auto i = first(merge_queue_, [&](std::size_t k) { return merge_partner(k) != npos; }))
      return Firing{3, *i, merge_partner(*i)};
    if (auto i = first(bind_queue_, [&](std::size_t k) { return applies1(slots_[k]); }))
      return Firing{1, *i, 0};
    return std::nullopt;
  }

  std::optional<Firing> find_random(std::mt19937_64& rng) const {
    std::vector<Firing> candidates;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const Slot& s = slots_[i];
      if (!s.alive) continue;
      if (applies4(s)) candidates.push_back({4, i, 0});
      if (applies2(s)) candidates.push_back({2, i, 0});
      if (applies1(s)) candidates.push_back({1, i, 0});
      if (s.feat >= 0 && is_var(s.s))
        for (std::size_t j : by_feature_.at(feat_key(s)))
          if (j != i) candidates.push_back({3, i, j});
    }
    if (candidates.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  }

  RuleFiring describe(const Firing& f) const {
    RuleFiring out{f.rule, {decode(slots_[f.i])}};
    if (f.rule == 3) out.consumed.push_back(decode(slots_[f.j]));
    return out;
  }

  void apply(const Firing& f) {
    const Slot s = slots_[f.i];
    switch (f.rule) {
      case 4:
        remove(f.i);
        break;
      case 2:
        replace(f.i, -1, s.t, s.s);
        break;
      case 3:
        replace(f.j, -1, s.t, slots_[f.j].t);
        break;
      case 1: {
        std::vector<std::size_t> hits = std::move(mentions_[s.s]);
        std::sort(hits.begin(), hits.end());
        hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
        mentions_[s.s] = {f.i};
        for (std::size_t k : hits) {
          if (k == f.i || !slots_[k].alive) continue;
          const Slot& o = slots_[k];
          if (o.s != s.s && o.t != s.s) continue;
          replace(k, o.feat, o.s == s.s ? s.t : o.s, o.t == s.s ? s.t : o.t);
        }
        break;
      }
    }
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Term> terms_;
  std::vector<int> occ_;  // live slots mentioning each term
  std::vector<std::vector<std::size_t>> mentions_;  // may hold stale slots
  std::unordered_map<std::string, int> var_ids_;
  std::unordered_map<std::string, int> const_ids_;
  std::vector<Attribute> attrs_;
  std::unordered_map<std::string, int> attr_ids_;
  std::vector<Slot> slots_;
  std::unordered_map<std::uint64_t, std::size_t> members_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_feature_;
  SlotQueue trivial_queue_, orient_queue_, merge_queue_, bind_queue_;
};

}  // namespace detail

inline SimplifiedSet simplify(const PrimitiveSet& p, const SimplifyOptions& options) {
  return detail::SimplifyEngine(p).run(options);
}

inline SimplifiedSet simplify(const PrimitiveSet& p, RuleOrder order = {}) {
  return simplify(p, SimplifyOptions{order, false});
}

// No feature applied to a constant, no two distinct constants equated.
inline bool is_clash_free(const SimplifiedSet& s) {
  for (const auto& p : s.formulas) {
    if (p.is_feature_eq() && p.subject.is_constant()) return false;
    if (p.is_term_eq() && p.subject.is_constant() && p.object.is_constant() &&
        p.subject != p.object)
      return false;
  }
  return true;
}

// No chain f1 x1 = x2, ..., fn xn = x1 among the feature equations.
inline bool is_acyclic(const SimplifiedSet& s) {
  std::unordered_map<std::string, std::vector<std::string>> succ;
  for (const auto& p : s.formulas)
    if (p.is_feature_eq() && p.subject.is_variable() && p.object.is_variable())
      succ[p.subject.name()].push_back(p.object.name());

  enum class Mark { kNew, kActive, kDone };
  std::unordered_map<std::string, Mark> mark;
  for (const auto& [start, unused] : succ) {
    if (mark[start] != Mark::kNew) continue;
    std::vector<std::pair<std::string, std::size_t>> frames{{start, 0}};
    mark[start] = Mark::kActive;
    while (!frames.empty()) {
      auto& [n, i] = frames.back();
      auto it = succ.find(n);
      if (it == succ.end() || i == it->second.size()) {
        mark[n] = Mark::kDone;
        frames.pop_back();
        continue;
      }
      std::string m = it->second[i++];
      Mark& mm = mark[m];
      if (mm == Mark::kActive) return false;
      if (mm == Mark::kNew) {
        mm = Mark::kActive;
        frames.emplace_back(std::move(m), 0);
      }
    }
  }
  return true;
}

// Extracted graph plus the node (or leaf) each reachable variable denotes.
struct Model {
  FeatureGraph graph;
  std::map<std::string, Target> valuation;
};

// Builds the graph described by a clash-free, acyclic solved form, rooted at
// the node `root` denotes. Nodes not reachable from the root are dropped.
inline Model extract_model(const SimplifiedSet& s, const Term& root) {
  if (!is_clash_free(s) || !is_acyclic(s))
    throw std::logic_error("extract_graph: set is not clash-free and acyclic");

  std::unordered_map<std::string, Term> binding;
  std::vector<std::string> variables;
  auto note = [&variables](const Term& t) {
    if (t.is_variable()) variables.push_back(t.name());
  };
  for (const auto& p : s.formulas) {
    note(p.subject);
    note(p.object);
    if (p.is_term_eq() && p.subject.is_variable())
      binding.emplace(p.subject.name(), p.object);
  }
  auto resolve = [&binding](Term t) {
    for (std::size_t guard = 0; t.is_variable() && guard <= binding.size(); ++guard) {
      auto it = binding.find(t.name());
      if (it == binding.end()) break;
      t = it->second;
    }
    return t;
  };

  std::unordered_map<std::string, std::vector<std::pair<Attribute, Term>>> succ;
  for (const auto& p : s.formulas)
    if (p.is_feature_eq())
      succ[resolve(p.subject).name()].emplace_back(*p.feature, resolve(p.object));

  Model out;
  Term root_rep = resolve(root);
  if (root_rep.is_constant()) {
    out.graph = FeatureGraph::atomic(root_rep.name());
  } else {
    std::unordered_map<std::string, NodeId> ids;
    auto discover = [&](const std::string& name) {
      NodeId id{static_cast<std::uint32_t>(ids.size())};
      ids.emplace(name, id);
      out.graph.nodes.push_back(id);
      return id;
    };
    out.graph.root = discover(root_rep.name());
    std::vector<std::pair<std::string, std::size_t>> frames{{root_rep.name(), 0}};
    while (!frames.empty()) {
      auto& [name, i] = frames.back();
      auto it = succ.find(name);
      if (it == succ.end() || i == it->second.size()) {
        frames.pop_back();
        continue;
      }
      NodeId from = ids.at(name);
      const auto& [label, target] = it->second[i++];
      if (target.is_constant()) {
        out.graph.edges.push_back({from, label, Constant{target.name()}});
        continue;
      }
      auto known = ids.find(target.name());
      if (known != ids.end()) {
        out.graph.edges.push_back({from, label, known->second});
      } else {
        NodeId to = discover(target.name());
        out.graph.edges.push_back({from, label, to});
        frames.emplace_back(target.name(), 0);
      }
    }
    variables.push_back(root.name());
    std::vector<Constant> leaves = out.graph.constants();
    for (const auto& v : variables) {
      if (is_fresh_name(v)) continue;
      Term rep = resolve(Term::variable(v));
      if (rep.is_variable()) {
        auto it = ids.find(rep.name());
        if (it != ids.end()) out.valuation.emplace(v, it->second);
      } else if (std::find(leaves.begin(), leaves.end(), Constant{rep.name()}) !=
                 leaves.end()) {
        out.valuation.emplace(v, Constant{rep.name()});
      }
    }
    return out;
  }
  for (const auto& v : variables)
    if (!is_fresh_name(v) && resolve(Term::variable(v)) == root_rep)
      out.valuation.emplace(v, Constant{root_rep.name()});
  if (root.is_variable()) out.valuation.emplace(root.name(), Constant{root_rep.name()});
  return out;
}

inline std::optional<Term> first_variable(const PrimitiveSet& s) {
  for (const auto& p : s) {
    if (p.subject.is_variable()) return p.subject;
    if (p.object.is_variable()) return p.object;
  }
  return std::nullopt;
}

inline FeatureGraph extract_graph(const SimplifiedSet& s, const Term& root) {
  return extract_model(s, root).graph;
}

// Roots the graph at the first variable of the set.
inline FeatureGraph extract_graph(const SimplifiedSet& s) {
  std::optional<Term> root = first_variable(s.formulas);
  if (!root) root = Term::variable("%root");
  return extract_graph(s, *root);
}

enum class Answer : std::uint8_t { kNo, kYes };

struct SatVerdict {
  Answer answer = Answer::kNo;
  std::optional<FeatureGraph> model;  // present iff answer is kYes
  std::map<std::string, Target> valuation;
  SimplifiedSet solved;

  bool yes() const { return answer == Answer::kYes; }
};

// Yes/No for an already flattened set.
inline bool decide(const PrimitiveSet& p, RuleOrder order = {}) {
  SimplifiedSet s = simplify(p, order);
  return is_clash_free(s) && is_acyclic(s);
}

// Decides whether `f` describes an acyclic feature-graph and, if so, returns
// it rooted at the first variable of `f`.
inline SatVerdict feature_graph_sat(const Formula& f, const SimplifyOptions& options = {}) {
  PrimitiveSet primitives = transform(f);
  SatVerdict out;
  out.solved = simplify(primitives, options);
  if (!is_clash_free(out.solved) || !is_acyclic(out.solved)) return out;

  std::vector<std::string> vars = variables_of(f);
  std::optional<Term> root;
  if (!vars.empty())
    root = Term::variable(vars.front());
  else
    root = first_variable(primitives);
  if (!root) root = Term::variable("%root");
  Model m = extract_model(out.solved, *root);
  out.answer = Answer::kYes;
  out.model = std::move(m.graph);
  out.valuation = std::move(m.valuation);
  return out;
}

}  // namespace fgram
