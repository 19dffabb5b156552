#pragma once

// Structured dumps for tooling. Field names:
//
//   graph:  {"atom": "a"}                                  atomic graph
//           {"root": 0, "nodes": [0, 1, ...],
//            "edges": [{"from": 0, "label": "f", "to": {"node": 1}},
//                      {"from": 1, "label": "g", "to": {"constant": "a"}}]}
//   report: {"id", "formula", "image", "oracle", "recognizer", "status",
//            "certificate", "assignment", "assignment_satisfies",
//            "states_explored"}

#include <string>

#include <json.hpp>

#include "fgram/graph.hpp"
#include "fgram/recognizer.hpp"
#include "fgram/sat.hpp"

namespace fgram {

inline nlohmann::json to_json(const Target& t) {
  if (const auto* n = std::get_if<NodeId>(&t)) return {{"node", n->value}};
  return {{"constant", std::get<Constant>(t).name}};
}

inline nlohmann::json to_json(const FeatureGraph& g) {
  if (g.is_atomic()) return {{"atom", g.atom->name}};
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId n : g.nodes) nodes.push_back(n.value);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from.value}, {"label", e.label}, {"to", to_json(e.to)}});
  return {{"root", g.root.value}, {"nodes", nodes}, {"edges", edges}};
}

inline nlohmann::json to_json(const Assignment& a) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [v, b] : a) out[std::to_string(v)] = b;
  return out;
}

inline nlohmann::json to_json(const CnfFormula& f, const EquivalenceReport& r, std::size_t id) {
  nlohmann::json out = {
      {"id", id},
      {"formula", to_string(f)},
      {"image", r.image},
      {"oracle", r.oracle_satisfiable ? "SAT" : "UNSAT"},
      {"recognizer", r.status == EquivalenceReport::Status::kBudgetExhausted ? "BUDGET"
                     : r.recognizer_accepts                                   ? "ACCEPT"
                                                                              : "REJECT"},
      {"status", to_string(r.status)},
      {"states_explored", r.states_explored},
  };
  out["certificate"] = r.derivation ? nlohmann::json(format_certificate(*r.derivation)) : nlohmann::json();
  out["assignment"] = r.extracted_assignment ? to_json(*r.extracted_assignment) : nlohmann::json();
  out["assignment_satisfies"] = r.extracted_satisfies ? nlohmann::json(*r.extracted_satisfies) : nlohmann::json();
  return out;
}

}  // namespace fgram
