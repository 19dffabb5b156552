#pragma once

// Attribute-value matrices.
//
//   value   := '#'N body? | body
//   body    := '[' (entry (',' entry)*)? ']' | constant
//   entry   := attribute ':' value
//
// Equal box labels `#N` denote the same value; a label carries a body at most
// once. `+` and `-` are ordinary constants.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fgram/detail/text.hpp"
#include "fgram/formula.hpp"
#include "fgram/graph.hpp"
#include "fgram/solver.hpp"

namespace fgram {

struct BoxLabel {
  std::uint32_t id = 0;

  friend bool operator==(BoxLabel, BoxLabel) = default;
  friend auto operator<=>(BoxLabel, BoxLabel) = default;
};

struct AvmEntry;

struct Avm {
  // monostate: a bare box-label reference such as `#1`.
  using Body = std::variant<std::monostate, Constant, std::vector<AvmEntry>>;

  std::optional<BoxLabel> box;
  Body body = std::vector<AvmEntry>{};

  static Avm matrix(std::vector<AvmEntry> entries = {});
  static Avm atomic(std::string constant) { return Avm{std::nullopt, Constant{std::move(constant)}}; }
  static Avm reference(std::uint32_t label) { return Avm{BoxLabel{label}, std::monostate{}}; }
  static Avm tagged(std::uint32_t label, Avm value) {
    value.box = BoxLabel{label};
    return value;
  }

  bool is_matrix() const { return std::holds_alternative<std::vector<AvmEntry>>(body); }
  bool is_atomic() const { return std::holds_alternative<Constant>(body); }
  bool is_reference() const { return std::holds_alternative<std::monostate>(body); }
  const std::vector<AvmEntry>& entries() const { return std::get<std::vector<AvmEntry>>(body); }

  friend bool operator==(const Avm&, const Avm&);
};

struct AvmEntry {
  Attribute attribute;
  Avm value;

  friend bool operator==(const AvmEntry&, const AvmEntry&) = default;
};

inline Avm Avm::matrix(std::vector<AvmEntry> entries) {
  return Avm{std::nullopt, std::move(entries)};
}

inline bool operator==(const Avm& a, const Avm& b) {
  return a.box == b.box && a.body == b.body;
}

// ---------------------------------------------------------------------------
// Text

namespace detail {

class AvmParser {
 public:
  explicit AvmParser(std::string_view text) : cur_(text) {}

  Avm parse() {
    cur_.skip_space();
    if (cur_.at_end()) cur_.fail("empty AVM");
    Avm out = value();
    cur_.skip_space();
    if (!cur_.at_end()) cur_.fail("trailing input after AVM");
    return out;
  }

 private:
  Avm value() {
    cur_.skip_space();
    if (cur_.peek() != '#') return body();

    std::size_t line = cur_.line(), column = cur_.column();
    cur_.get();
    std::string digits;
    while (std::isdigit(static_cast<unsigned char>(cur_.peek()))) digits.push_back(cur_.get());
    if (digits.empty() || digits.size() > 9) cur_.fail("expected a box label number after '#'");
    auto label = static_cast<std::uint32_t>(std::stoul(digits));
    if (label == 0) throw ParseError("box labels start at 1", line, column);

    cur_.skip_space();
    char c = cur_.peek();
    if (cur_.at_end() || c == ',' || c == ']') return Avm::reference(label);
    if (!bound_.insert(label).second)
      throw ParseError("box label #" + digits + " is bound to a value twice", line, column);
    return Avm::tagged(label, body());
  }

  Avm body() {
    cur_.skip_space();
    if (cur_.peek() == '[') return matrix();
    std::string sym = cur_.read_symbol();
    if (sym.empty()) cur_.fail("expected '[', '#' or a constant");
    return Avm::atomic(std::move(sym));
  }

  Avm matrix() {
    cur_.get();  // '['
    std::vector<AvmEntry> entries;
    std::set<std::string> seen;
    cur_.skip_space();
    if (cur_.peek() == ']') {
      cur_.get();
      return Avm::matrix();
    }
    while (true) {
      cur_.skip_space();
      std::size_t line = cur_.line(), column = cur_.column();
      std::string attr = cur_.read_symbol();
      if (attr.empty()) cur_.fail("expected an attribute");
      if (!seen.insert(attr).second)
        throw ParseError("duplicate attribute '" + attr + "'", line, column);
      cur_.skip_space();
      if (cur_.peek() != ':') cur_.fail("expected ':' after attribute");
      cur_.get();
      entries.push_back({std::move(attr), value()});
      cur_.skip_space();
      if (cur_.at_end()) cur_.fail("unterminated '['");
      char c = cur_.get();
      if (c == ']') break;
      if (c != ',') cur_.fail("expected ',' or ']'");
    }
    return Avm::matrix(std::move(entries));
  }

  Cursor cur_;
  std::set<std::uint32_t> bound_;
};

}  // namespace detail

inline Avm parse_avm(std::string_view text) { return detail::AvmParser(text).parse(); }

inline std::string format_avm(const Avm& a) {
  std::string out;
  if (a.box) {
    out = "#" + std::to_string(a.box->id);
    if (a.is_reference()) return out;
    out += " ";
  }
  if (a.is_atomic()) return out + std::get<Constant>(a.body).name;
  out += "[";
  const auto& entries = a.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ", ";
    out += entries[i].attribute + ": " + format_avm(entries[i].value);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// AVM -> formula

namespace detail {

class AvmToFormula {
 public:
  explicit AvmToFormula(std::string prefix) : prefix_(std::move(prefix)) {}

  Formula run(const Avm& a) {
    Term root = fresh();
    if (a.box) tags_.emplace(a.box->id, root);
    describe(root, a);
    if (out_.conjuncts.empty()) out_.conjuncts.push_back({{}, root, {}, root});
    return std::move(out_);
  }

 private:
  Term fresh() { return Term::variable(prefix_ + std::to_string(counter_++)); }

  Term tag_variable(BoxLabel label) {
    auto it = tags_.find(label.id);
    if (it != tags_.end()) return it->second;
    Term v = fresh();
    tags_.emplace(label.id, v);
    return v;
  }

  // Emits constraints saying node `at` has the content of `a`.
  void describe(const Term& at, const Avm& a) {
    if (a.is_atomic()) {
      out_.conjuncts.push_back({{}, at, {}, Term::constant(std::get<Constant>(a.body).name)});
      return;
    }
    if (!a.is_matrix()) return;
    for (const auto& e : a.entries()) {
      const Avm& v = e.value;
      if (!v.box && v.is_atomic()) {
        out_.conjuncts.push_back(
            {{e.attribute}, at, {}, Term::constant(std::get<Constant>(v.body).name)});
        continue;
      }
      Term node = v.box ? tag_variable(*v.box) : fresh();
      out_.conjuncts.push_back({{e.attribute}, at, {}, node});
      describe(node, v);
    }
  }

  std::string prefix_;
  std::size_t counter_ = 0;
  std::unordered_map<std::uint32_t, Term> tags_;
  Formula out_;
};

}  // namespace detail

// Root is ?x0; inner nodes and box labels get ?x1, ?x2, ... in reading order.
// Each entry contributes at most two equations.
inline Formula avm_to_formula(const Avm& a) { return detail::AvmToFormula("x").run(a); }

// ---------------------------------------------------------------------------
// Graph -> AVM

// Targets with more than one incoming edge receive box labels, numbered in
// depth-first discovery order from 1.
inline Avm graph_to_avm(const FeatureGraph& g) {
  if (g.is_atomic()) return Avm::atomic(g.atom->name);

  std::map<Target, std::size_t> indegree;
  std::map<NodeId, std::vector<const Edge*>> out_edges;
  for (const auto& e : g.edges) {
    ++indegree[e.to];
    out_edges[e.from].push_back(&e);
  }
  std::map<Target, std::uint32_t> labels;

  auto build = [&](auto&& self, NodeId n) -> Avm {
    std::vector<AvmEntry> entries;
    for (const Edge* e : out_edges[n]) {
      Avm value;
      bool shared = indegree[e->to] > 1;
      if (shared) {
        auto it = labels.find(e->to);
        if (it != labels.end()) {
          entries.push_back({e->label, Avm::reference(it->second)});
          continue;
        }
        labels.emplace(e->to, static_cast<std::uint32_t>(labels.size() + 1));
      }
      std::uint32_t label = shared ? labels.at(e->to) : 0;
      if (const auto* c = std::get_if<Constant>(&e->to))
        value = Avm::atomic(c->name);
      else
        value = self(self, std::get<NodeId>(e->to));
      if (shared) value.box = BoxLabel{label};
      entries.push_back({e->label, std::move(value)});
    }
    return Avm::matrix(std::move(entries));
  };
  return build(build, g.root);
}

// The graph an AVM describes, or nullopt if it is inconsistent or cyclic.
inline std::optional<FeatureGraph> avm_graph(const Avm& a) {
  SatVerdict v = feature_graph_sat(avm_to_formula(a));
  if (!v.yes()) return std::nullopt;
  return std::move(v.model);
}

// a ⊔ b: both descriptions conjoined with their roots identified. nullopt
// signals a clash or a cycle.
inline std::optional<Avm> unify(const Avm& a, const Avm& b) {
  Formula fa = detail::AvmToFormula("x").run(a);
  Formula fb = rename_variables(detail::AvmToFormula("y").run(b), [](const std::string& v) {
    return v == "y0" ? std::string("x0") : v;
  });
  SatVerdict v = feature_graph_sat(conjoin(std::move(fa), fb));
  if (!v.yes()) return std::nullopt;
  return graph_to_avm(*v.model);
}

}  // namespace fgram
