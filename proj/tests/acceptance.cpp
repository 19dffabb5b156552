// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <regex>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fgram/fgram.hpp"
#include "support.hpp"

namespace {

using namespace fgram;
using fgram::testing::Rng;
using Clock = std::chrono::steady_clock;

struct Result {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 5) notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
  }
  Result outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + notes_.str()};
  }

 private:
  std::size_t failures_ = 0;
  std::ostringstream notes_;
};

template <class F>
double best_seconds(int reps, F&& f) {
  double best = 1e9;
  for (int i = 0; i < reps; ++i) {
    auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

const char* kManWalks =
    "subject ?x = ?y & predicate ?x = ?z & number ?y = number ?z & number subject ?x = singular & tense ?x = present";

// ---------------------------------------------------------------------------

Result man_walks() {
  Checker c;
  Formula f = parse_formula(kManWalks);
  SatVerdict v = feature_graph_sat(f);
  c.expect(v.yes(), "formula answered No");

  // Root with subject, predicate and tense; the two number edges share one
  // singular value.
  FeatureGraph expected;
  expected.root = NodeId{0};
  expected.nodes = {NodeId{0}, NodeId{1}, NodeId{2}};
  expected.edges = {{NodeId{0}, "subject", NodeId{1}},
                    {NodeId{0}, "predicate", NodeId{2}},
                    {NodeId{0}, "tense", Constant{"present"}},
                    {NodeId{1}, "number", Constant{"singular"}},
                    {NodeId{2}, "number", Constant{"singular"}}};
  c.expect(v.model && graph_isomorphic(*v.model, expected), "model not isomorphic to the reconstructed graph");
  auto from_avm = avm_graph(parse_avm("[subject: [number: #1 singular], predicate: [number: #1], tense: present]"));
  c.expect(v.model && from_avm && graph_isomorphic(*v.model, *from_avm), "model differs from the AVM's graph");

  Formula plural = conjoin(f, parse_formula("number subject ?x = plural"));
  c.expect(!feature_graph_sat(plural).yes(), "plural subject did not flip the answer");

  double t = best_seconds(50, [&] { (void)feature_graph_sat(f); });
  c.expect(t < 1e-3, "took " + fmt("%.3f", t * 1e3) + " ms");
  return c.outcome("Yes, isomorphic, plural -> No, " + fmt("%.1f", t * 1e6) + " us");
}

Result backbone_language() {
  Checker c;
  const RegularGrammar g = builtin_regular_grammar();
  const std::string alphabet = "#01pq";
  std::size_t checked = 0, members = 0;
  std::vector<std::string> level{""};
  auto t0 = Clock::now();
  for (int len = 0; len <= 8; ++len) {
    std::vector<std::string> next;
    if (len < 8) next.reserve(level.size() * alphabet.size());
    for (const auto& w : level) {
      bool expected = std::regex_match(w, fgram::testing::backbone_regex());
      bool got = backbone_recognize(g, w);
      c.expect(expected == got, "disagreement on \"" + w + "\"");
      ++checked;
      members += got;
      if (len < 8)
        for (char ch : alphabet) next.push_back(w + ch);
    }
    level = std::move(next);
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return c.outcome(std::to_string(checked) + " strings, " + std::to_string(members) + " in the language, " +
                   fmt("%.1f", secs) + " s");
}

Result proper_subset() {
  Checker c;
  c.expect(backbone_recognize(builtin_regular_grammar(), "#10p#10q"), "backbone rejects #10p#10q");
  RecognitionResult r = recognize(builtin_unification_grammar(), "#10p#10q");
  c.expect(r.outcome == fgram::Outcome::kRejected, "G does not reject #10p#10q");
  return c.outcome("backbone ACCEPT, G REJECT (" + std::to_string(r.states_explored) + " states)");
}

// Criteria 4, 5, 6 (length part) and 7 (acceptance part) share one pass over
// the corpus.
struct CorpusRun {
  std::size_t formulas = 0, satisfiable = 0, disagreements = 0, budget = 0;
  std::size_t extraction_failures = 0, length_mismatches = 0, verify_failures = 0;
  std::size_t shape_failures = 0, inclusion_failures = 0, bound_failures = 0;
  double seconds = 0;
  std::vector<std::pair<std::string, Derivation>> accepted;  // (image, derivation)
  std::vector<std::string> notes;
};

CorpusRun run_corpus() {
  CorpusRun out;
  const UnificationGrammar g = builtin_unification_grammar();
  const RegularGrammar bb = builtin_regular_grammar();
  std::vector<CnfFormula> corpus = fgram::testing::desk_scale_corpus();
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) corpus.push_back(fgram::testing::random_cnf(rng, 6, 5, 3));

  auto t0 = Clock::now();
  for (const auto& f : corpus) {
    ++out.formulas;
    EquivalenceReport r;
    try {
      r = equivalence_check(f, g);
    } catch (const DerivationBoundExceeded&) {
      ++out.bound_failures;
      continue;
    }
    auto note = [&](const std::string& what) {
      if (out.notes.size() < 5) out.notes.push_back(what + " " + to_string(f));
    };
    if (r.image.size() != reduction_length(f)) ++out.length_mismatches, note("length");
    if (!backbone_recognize(bb, r.image)) ++out.inclusion_failures, note("image outside backbone");
    if (r.status == EquivalenceReport::Status::kBudgetExhausted) ++out.budget, note("budget");
    if (r.oracle_satisfiable != fgram::testing::oracle_satisfiable(f)) ++out.disagreements, note("oracle");
    if (r.oracle_satisfiable != r.recognizer_accepts) ++out.disagreements, note("disagree");
    out.satisfiable += r.oracle_satisfiable;
    if (!r.recognizer_accepts) continue;

    const Derivation& d = *r.derivation;
    if (d.steps.size() > 3 * r.image.size() + 3) ++out.bound_failures, note("length bound");
    if (!verify_certificate(g, r.image, d)) ++out.verify_failures, note("verify");
    if (fgram::testing::clause_blocks(g, d) != f.clauses.size()) ++out.shape_failures, note("block shape");
    // The report's assignment is to_assignment(f, extract_assignment(g, d)).
    if (!r.extracted_assignment || !evaluate(f, *r.extracted_assignment)) ++out.extraction_failures, note("extraction");
    out.accepted.emplace_back(r.image, d);
  }
  out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

std::string join_notes(const CorpusRun& run) {
  std::string s;
  for (const auto& n : run.notes) s += (s.empty() ? "" : "; ") + n;
  return s;
}

Result sat_equivalence(const CorpusRun& run) {
  Checker c;
  c.expect(run.disagreements == 0, std::to_string(run.disagreements) + " disagreements");
  c.expect(run.budget == 0, std::to_string(run.budget) + " budget exhaustions");
  c.expect(run.bound_failures == 0, std::to_string(run.bound_failures) + " derivation-bound hits");
  c.expect(run.inclusion_failures == 0, std::to_string(run.inclusion_failures) + " images outside the backbone");
  c.expect(run.shape_failures == 0, std::to_string(run.shape_failures) + " derivations with a bad block shape");
  c.expect(run.seconds < 300, "took " + fmt("%.0f", run.seconds) + " s");
  Result o = c.outcome(std::to_string(run.formulas) + " formulas (" + std::to_string(run.satisfiable) +
                        " satisfiable), zero disagreements, " + fmt("%.1f", run.seconds) + " s");
  if (!o.pass) o.detail += " [" + join_notes(run) + "]";
  return o;
}

Result assignment_extraction(const CorpusRun& run) {
  Checker c;
  c.expect(run.extraction_failures == 0, std::to_string(run.extraction_failures) + " extracted assignments fail");
  c.expect(run.accepted.size() == run.satisfiable, "accepted count differs from satisfiable count");
  return c.outcome(std::to_string(run.accepted.size()) + " extracted assignments all satisfy their formula");
}

CnfFormula ladder_formula(std::size_t clauses, Rng& rng) {
  CnfFormula f;
  for (std::size_t i = 0; i < clauses; ++i) {
    Clause cl;
    for (int j = 0; j < 3; ++j)
      cl.literals.push_back({static_cast<std::uint32_t>(fgram::testing::uniform(rng, 1, 1000)), j % 2 == 1});
    f.clauses.push_back(std::move(cl));
  }
  return f;
}

Result reduction_linearity(const CorpusRun& run) {
  Checker c;
  c.expect(run.length_mismatches == 0, std::to_string(run.length_mismatches) + " length mismatches");

  // Each rung doubles the previous formula by appending fresh clauses.
  Rng rng(99);
  std::vector<CnfFormula> rungs{ladder_formula(25000, rng)};
  for (int i = 1; i < 4; ++i) {
    CnfFormula next = rungs.back();
    CnfFormula more = ladder_formula(next.clauses.size(), rng);
    next.clauses.insert(next.clauses.end(), more.clauses.begin(), more.clauses.end());
    rungs.push_back(std::move(next));
  }
  std::vector<double> times;
  std::size_t sink = 0;
  for (const auto& f : rungs) {
    c.expect(reduce_to_string(f).size() == reduction_length(f), "length mismatch on ladder rung");
    times.push_back(best_seconds(9, [&] { sink += reduce_to_string(f).size(); }));
  }
  std::string ratios;
  for (std::size_t i = 1; i < times.size(); ++i) {
    double ratio = times[i] / times[i - 1];
    ratios += (i > 1 ? ", " : "") + fmt("%.2f", ratio);
    c.expect(ratio <= 2.5, "doubling ratio " + fmt("%.2f", ratio));
  }
  return c.outcome("length identity on " + std::to_string(run.formulas) + " formulas; doubling ratios " + ratios +
                   (sink ? "" : " "));
}

Result certificate_checking(const CorpusRun& run) {
  Checker c;
  const UnificationGrammar g = builtin_unification_grammar();
  c.expect(run.verify_failures == 0, std::to_string(run.verify_failures) + " emitted derivations rejected");

  Rng rng(7);
  std::size_t mutated = 0, rejected = 0;
  std::size_t by_kind[3] = {0, 0, 0};
  std::vector<const std::pair<std::string, Derivation>*> pool;
  for (const auto& a : run.accepted)
    if (a.second.steps.size() >= 3) pool.push_back(&a);
  while (mutated < 1000 && !pool.empty()) {
    const auto& [w, d] = *pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    std::vector<std::size_t> rules = d.rule_indices();
    std::string target = w;
    int kind = static_cast<int>(mutated % 3);
    if (kind == 0) {
      // swap two steps that use different rules
      std::size_t i = fgram::testing::uniform(rng, 0, static_cast<int>(rules.size()) - 1);
      std::size_t j = fgram::testing::uniform(rng, 0, static_cast<int>(rules.size()) - 1);
      if (rules[i] == rules[j]) continue;
      std::swap(rules[i], rules[j]);
    } else if (kind == 1) {
      rules.erase(rules.begin() + fgram::testing::uniform(rng, 0, static_cast<int>(rules.size()) - 1));
    } else {
      // keep the derivation, perturb the string it is checked against
      std::size_t pos = fgram::testing::uniform(rng, 0, static_cast<int>(w.size()));
      if (pos == w.size()) {
        target += "#1p";
      } else {
        static const std::map<char, char> flip{{'0', '1'}, {'1', '0'}, {'p', 'q'}, {'q', 'p'}, {'#', '1'}};
        target[pos] = flip.at(target[pos]);
      }
    }
    ++mutated;
    ++by_kind[kind];
    rejected += !verify_certificate(g, target, make_derivation(g, rules));
  }
  c.expect(mutated == 1000, "only " + std::to_string(mutated) + " mutations generated");
  c.expect(rejected == mutated, std::to_string(mutated - rejected) + " mutated certificates accepted");
  return c.outcome(std::to_string(run.accepted.size()) + " emitted derivations verified; " +
                   std::to_string(rejected) + "/" + std::to_string(mutated) + " mutations rejected (" +
                   std::to_string(by_kind[0]) + " swapped, " + std::to_string(by_kind[1]) + " deleted, " +
                   std::to_string(by_kind[2]) + " yield)");
}

Result order_invariance() {
  Checker c;
  Rng rng(8);
  std::size_t yes = 0;
  for (int i = 0; i < 500; ++i) {
    PrimitiveSet p = fgram::testing::random_primitive_set(rng, 60, 3 + i % 12);
    bool expected = decide(p, RuleOrder::priority());
    yes += expected;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
      c.expect(decide(p, RuleOrder::random(seed * 7919 + i)) == expected,
               "set " + std::to_string(i) + " seed " + std::to_string(seed));
  }
  return c.outcome("500 sets x 100 orders, identical verdicts (" + std::to_string(yes) + " Yes)");
}

// Chain family: x_{k+1} = x_k, f x_k = y_k, f x_{k+1} = z_k, g y_k = c,
// repeated and cut off at n formulas.
PrimitiveSet chain_family(std::size_t n) {
  PrimitiveSet p;
  auto var = [](const char* base, std::size_t k) { return Term::variable(base + std::to_string(k)); };
  for (std::size_t k = 0;; ++k) {
    for (auto q : {PrimitiveFormula::term_eq(var("x", k + 1), var("x", k)),
                   PrimitiveFormula::feature_eq("f", var("x", k), var("y", k)),
                   PrimitiveFormula::feature_eq("f", var("x", k + 1), var("z", k)),
                   PrimitiveFormula::feature_eq("g", var("y", k), Term::constant("c"))}) {
      if (p.size() == n) return p;
      p.insert(q);
    }
  }
}

// Calibrated once on the chain family: the largest applications / n^2 over
// sizes 25..400 was 28 / 625 = 0.0448.
constexpr double kQuadraticConstant = 0.045;

Result quadratic_bound() {
  Checker c;
  std::string counts;
  for (std::size_t n : {25, 50, 100, 200, 400}) {
    SimplifiedSet s = simplify(chain_family(n));
    counts += (counts.empty() ? "" : ", ") + std::to_string(n) + ":" + std::to_string(s.applications);
    c.expect(static_cast<double>(s.applications) <= kQuadraticConstant * static_cast<double>(n * n),
             "n=" + std::to_string(n) + " applications=" + std::to_string(s.applications));
  }
  return c.outcome("applications <= " + fmt("%.3f", kQuadraticConstant) + " n^2 (" + counts + ")");
}

// Flips one edge label or retargets one edge; the result may or may not be
// isomorphic to the input.
FeatureGraph perturb(Rng& rng, FeatureGraph g) {
  if (g.is_atomic() || g.edges.empty()) return g;
  Edge& e = g.edges[fgram::testing::uniform(rng, 0, static_cast<int>(g.edges.size()) - 1)];
  if (fgram::testing::chance(rng, 0.5)) {
    if (std::holds_alternative<Constant>(e.to)) e.to = Constant{std::get<Constant>(e.to).name == "a" ? "b" : "a"};
  } else {
    e.label = e.label == "f" ? "g" : "f";
  }
  return g;
}

Result avm_round_trip() {
  Checker c;
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    FeatureGraph g = fgram::testing::random_graph(rng);
    Avm a = graph_to_avm(g);
    auto back = avm_graph(parse_avm(format_avm(a)));
    c.expect(back && graph_isomorphic(*back, g), "round trip " + format_avm(a));
  }

  std::size_t pairs = 0, isomorphic = 0;
  std::vector<FeatureGraph> small = fgram::testing::all_small_graphs(3);
  for (const auto& a : small)
    for (const auto& b : small) {
      bool expected = fgram::testing::brute_force_isomorphic(a, b);
      c.expect(graph_isomorphic(a, b) == expected, "exhaustive pair disagrees");
      ++pairs;
      isomorphic += expected;
    }
  fgram::testing::GraphShape shape;
  shape.max_nodes = 6;
  shape.labels = {"f", "g", "h"};
  shape.constants = {"a", "b"};
  for (int i = 0; i < 3000; ++i) {
    FeatureGraph a = fgram::testing::random_graph(rng, shape);
    FeatureGraph b = i % 3 == 0   ? fgram::testing::relabel(rng, a)
                     : i % 3 == 1 ? fgram::testing::relabel(rng, perturb(rng, a))
                                  : fgram::testing::random_graph(rng, shape);
    if (!validate_graph(b)) continue;
    bool expected = fgram::testing::brute_force_isomorphic(a, b);
    c.expect(graph_isomorphic(a, b) == expected, "random pair disagrees");
    ++pairs;
    isomorphic += expected;
  }
  return c.outcome("1000 round trips isomorphic; isomorphism agrees with bijection search on " +
                   std::to_string(pairs) + " pairs (" + std::to_string(small.size()) + " exhaustive graphs, " +
                   std::to_string(isomorphic) + " isomorphic pairs)");
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Result()>& check) {
    Result o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };

  CorpusRun corpus;
  bool corpus_ok = true;
  try {
    corpus = run_corpus();
  } catch (const std::exception& e) {
    corpus_ok = false;
    std::printf("corpus run aborted: %s\n", e.what());
  }
  auto needs_corpus = [&](std::function<Result(const CorpusRun&)> f) {
    return [=, &corpus]() -> Result {
      if (!corpus_ok) return {false, "corpus run aborted"};
      return f(corpus);
    };
  };

  report(1, "feature-graph example", man_walks);
  report(2, "backbone language", backbone_language);
  report(3, "proper subset witness", proper_subset);
  report(4, "SAT equivalence (desk scale)", needs_corpus(sat_equivalence));
  report(5, "assignment extraction", needs_corpus(assignment_extraction));
  report(6, "reduction linearity", needs_corpus(reduction_linearity));
  report(7, "certificate checking", needs_corpus(certificate_checking));
  report(8, "rule-order invariance", order_invariance);
  report(9, "quadratic regression bound", quadratic_bound);
  report(10, "AVM round trip", avm_round_trip);

  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
