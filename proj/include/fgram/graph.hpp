#pragma once

// Rooted feature-graphs: the model class of the description language.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fgram/formula.hpp"

namespace fgram {

struct NodeId {
  std::uint32_t value = 0;

  friend bool operator==(NodeId, NodeId) = default;
  friend auto operator<=>(NodeId, NodeId) = default;
};

struct Constant {
  std::string name;

  friend bool operator==(const Constant&, const Constant&) = default;
  friend auto operator<=>(const Constant&, const Constant&) = default;
};

// An edge ends either at an inner node or at an atomic leaf. Leaves are
// identified by their constant, so one constant is one leaf per graph.
using Target = std::variant<NodeId, Constant>;

struct Edge {
  NodeId from;
  Attribute label;
  Target to;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Either the atomic graph (a, {}) or a rooted graph over inner nodes. The
// struct can hold ill-formed content; validate_graph decides well-formedness.
struct FeatureGraph {
  std::optional<Constant> atom;
  NodeId root;
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;

  static FeatureGraph atomic(std::string constant) {
    FeatureGraph g;
    g.atom = Constant{std::move(constant)};
    return g;
  }

  bool is_atomic() const { return atom.has_value(); }

  // Distinct constant leaves in edge order.
  std::vector<Constant> constants() const {
    std::vector<Constant> out;
    for (const auto& e : edges)
      if (const auto* c = std::get_if<Constant>(&e.to))
        if (std::find(out.begin(), out.end(), *c) == out.end()) out.push_back(*c);
    return out;
  }

  // Outgoing edges of `n`, in edge order.
  std::vector<const Edge*> out_edges(NodeId n) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges)
      if (e.from == n) out.push_back(&e);
    return out;
  }

  friend bool operator==(const FeatureGraph&, const FeatureGraph&) = default;
};

inline std::string to_string(const Target& t) {
  if (const auto* n = std::get_if<NodeId>(&t)) return "n" + std::to_string(n->value);
  return std::get<Constant>(t).name;
}

// Checks determinism (one edge per node and label), reachability of every
// node from the root, and acyclicity.
inline bool validate_graph(const FeatureGraph& g) {
  if (g.is_atomic()) return detail::is_symbol(g.atom->name) && g.nodes.empty() && g.edges.empty();

  std::set<NodeId> nodes(g.nodes.begin(), g.nodes.end());
  if (nodes.size() != g.nodes.size() || !nodes.count(g.root)) return false;

  std::map<NodeId, std::vector<NodeId>> succ;
  std::set<std::pair<NodeId, Attribute>> seen_labels;
  for (const auto& e : g.edges) {
    if (!nodes.count(e.from)) return false;
    if (!seen_labels.emplace(e.from, e.label).second) return false;
    if (const auto* n = std::get_if<NodeId>(&e.to)) {
      if (!nodes.count(*n)) return false;
      succ[e.from].push_back(*n);
    }
  }

  // Reachability.
  std::set<NodeId> reached{g.root};
  std::vector<NodeId> stack{g.root};
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    for (NodeId m : succ[n])
      if (reached.insert(m).second) stack.push_back(m);
  }
  if (reached.size() != nodes.size()) return false;

  // Acyclicity: three-colour DFS.
  enum class Mark { kNew, kActive, kDone };
  std::map<NodeId, Mark> mark;
  for (NodeId start : g.nodes) {
    if (mark[start] != Mark::kNew) continue;
    std::vector<std::pair<NodeId, std::size_t>> frames{{start, 0}};
    mark[start] = Mark::kActive;
    while (!frames.empty()) {
      auto& [n, i] = frames.back();
      const auto& next = succ[n];
      if (i == next.size()) {
        mark[n] = Mark::kDone;
        frames.pop_back();
        continue;
      }
      NodeId m = next[i++];
      if (mark[m] == Mark::kActive) return false;
      if (mark[m] == Mark::kNew) {
        mark[m] = Mark::kActive;
        frames.emplace_back(m, 0);
      }
    }
  }
  return true;
}

// Root- and label-preserving isomorphism. Determinism makes the correspondence
// forced, so a simultaneous walk from both roots decides it in linear time.
// Both graphs are expected to be valid.
inline bool graph_isomorphic(const FeatureGraph& a, const FeatureGraph& b) {
  if (a.is_atomic() || b.is_atomic()) return a.atom == b.atom;
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size())
    return false;

  auto index = [](const FeatureGraph& g) {
    std::map<NodeId, std::map<Attribute, Target>> out;
    for (const auto& e : g.edges) out[e.from].emplace(e.label, e.to);
    return out;
  };
  auto ia = index(a);
  auto ib = index(b);

  std::map<NodeId, NodeId> fwd{{a.root, b.root}};
  std::map<NodeId, NodeId> bwd{{b.root, a.root}};
  std::vector<std::pair<NodeId, NodeId>> work{{a.root, b.root}};
  while (!work.empty()) {
    auto [u, v] = work.back();
    work.pop_back();
    const auto& ea = ia[u];
    const auto& eb = ib[v];
    if (ea.size() != eb.size()) return false;
    for (const auto& [label, ta] : ea) {
      auto it = eb.find(label);
      if (it == eb.end()) return false;
      const Target& tb = it->second;
      if (ta.index() != tb.index()) return false;
      if (std::holds_alternative<Constant>(ta)) {
        if (ta != tb) return false;
        continue;
      }
      NodeId x = std::get<NodeId>(ta);
      NodeId y = std::get<NodeId>(tb);
      auto fx = fwd.find(x);
      auto by = bwd.find(y);
      if (fx == fwd.end() && by == bwd.end()) {
        fwd.emplace(x, y);
        bwd.emplace(y, x);
        work.emplace_back(x, y);
      } else if (fx == fwd.end() || by == bwd.end() || fx->second != y) {
        return false;
      }
    }
  }
  return fwd.size() == a.nodes.size();
}

}  // namespace fgram
