// fgram: command-line front end for the feature-graph solver, the AVM
// unifier, the unification-grammar recognizer and the SAT reduction harness.
//
// Exit status: 0 positive answer / agreement, 1 negative answer / failure,
// 2 usage or input error.

#include <atomic>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgram/fgram.hpp"
#include "fgram/json_io.hpp"

namespace {

using nlohmann::json;

constexpr int kPositive = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fgram::UnificationGrammar load_grammar(const std::string& path) {
  if (path.empty()) return fgram::builtin_unification_grammar();
  return fgram::parse_grammar(read_input(path));
}

bool want_json(const std::string& format) { return format == "json"; }

// -- solve ------------------------------------------------------------------

int cmd_solve(const std::string& file, bool model, bool trace, const std::string& format) {
  fgram::Formula f = fgram::parse_formula(read_input(file));
  fgram::SatVerdict v = fgram::feature_graph_sat(f, fgram::SimplifyOptions{{}, trace});
  if (want_json(format)) {
    json out = {{"answer", v.yes() ? "Yes" : "No"}, {"applications", v.solved.applications}};
    if (model && v.yes()) {
      out["graph"] = fgram::to_json(*v.model);
      out["avm"] = fgram::format_avm(fgram::graph_to_avm(*v.model));
    }
    if (trace) {
      json steps = json::array();
      for (const auto& r : v.solved.trace) {
        json consumed = json::array();
        for (const auto& p : r.consumed) consumed.push_back(fgram::to_string(p));
        steps.push_back({{"rule", r.rule}, {"consumed", consumed}});
      }
      out["trace"] = steps;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << (v.yes() ? "Yes" : "No") << "\n";
    if (trace)
      for (const auto& r : v.solved.trace) {
        std::cout << "  rule " << r.rule << ":";
        for (const auto& p : r.consumed) std::cout << " [" << fgram::to_string(p) << "]";
        std::cout << "\n";
      }
    if (model && v.yes()) std::cout << fgram::format_avm(fgram::graph_to_avm(*v.model)) << "\n";
  }
  return v.yes() ? kPositive : kNegative;
}

// -- unify ------------------------------------------------------------------

int cmd_unify(const std::string& a_file, const std::string& b_file, const std::string& format) {
  fgram::Avm a = fgram::parse_avm(read_input(a_file));
  fgram::Avm b = fgram::parse_avm(read_input(b_file));
  std::optional<fgram::Avm> u = fgram::unify(a, b);
  if (want_json(format)) {
    json out = {{"result", u ? json(fgram::format_avm(*u)) : json("FAIL")}};
    if (u) out["graph"] = fgram::to_json(*fgram::avm_graph(*u));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << (u ? fgram::format_avm(*u) : "FAIL") << "\n";
  }
  return u ? kPositive : kNegative;
}

// -- recognize --------------------------------------------------------------

int cmd_recognize(const std::string& grammar_file, const std::string& w, bool cert, const std::string& check,
                  std::size_t max_states, const std::string& format) {
  fgram::UnificationGrammar g = load_grammar(grammar_file);
  if (!check.empty()) {
    fgram::Derivation d = fgram::parse_certificate(g, check);
    bool ok = fgram::verify_certificate(g, w, d);
    if (want_json(format))
      std::cout << json{{"string", w}, {"certificate", check}, {"valid", ok}}.dump(2) << "\n";
    else
      std::cout << (ok ? "VALID" : "INVALID") << "\n";
    return ok ? kPositive : kNegative;
  }

  fgram::RecognitionResult r = fgram::recognize(g, w, fgram::RecognizeOptions{max_states});
  const char* verdict = r.outcome == fgram::Outcome::kBudgetExhausted ? "BUDGET" : r.accepted ? "ACCEPT" : "REJECT";
  if (want_json(format)) {
    json out = {{"string", w}, {"verdict", verdict}, {"states_explored", r.states_explored}};
    if (r.derivation) out["certificate"] = fgram::format_certificate(*r.derivation);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << verdict << "\n";
    if (cert && r.derivation) std::cout << fgram::format_certificate(*r.derivation) << "\n";
  }
  return r.accepted ? kPositive : kNegative;
}

// -- reduce -----------------------------------------------------------------

int cmd_reduce(const std::string& file, const std::string& format) {
  fgram::DimacsParse p = fgram::parse_dimacs_with_warnings(read_input(file));
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << "\n";
  std::string image = fgram::reduce_to_string(p.formula);
  if (want_json(format))
    std::cout << json{{"formula", fgram::to_string(p.formula)}, {"image", image}, {"length", image.size()}}.dump(2)
              << "\n";
  else
    std::cout << image << "\n";
  return kPositive;
}

// -- verify -----------------------------------------------------------------

int cmd_verify(const std::vector<std::string>& files, const std::string& grammar_file, unsigned jobs,
               std::size_t max_states, const std::string& format) {
  const fgram::UnificationGrammar g = load_grammar(grammar_file);
  std::vector<fgram::CnfFormula> formulas;
  for (const auto& f : files) {
    fgram::DimacsParse p = fgram::parse_dimacs_with_warnings(read_input(f));
    for (const auto& w : p.warnings) std::cerr << "warning: " << f << ": " << w << "\n";
    formulas.push_back(std::move(p.formula));
  }

  std::vector<fgram::EquivalenceReport> reports(formulas.size());
  std::vector<std::string> errors(formulas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < formulas.size();) {
      try {
        reports[i] = fgram::equivalence_check(formulas[i], g, {fgram::kDefaultVariableCap, max_states});
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::max(1u, jobs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool all_agree = true;
  json out = json::array();
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    if (!errors[i].empty()) throw InputError(files[i] + ": " + errors[i]);
    all_agree = all_agree && reports[i].agreement();
    if (want_json(format)) {
      json r = fgram::to_json(formulas[i], reports[i], i);
      r["file"] = files[i];
      out.push_back(r);
    } else {
      std::cout << files[i] << ": " << fgram::format_report_line(formulas[i], reports[i]) << "\n";
    }
  }
  if (want_json(format)) std::cout << out.dump(2) << "\n";
  return all_agree ? kPositive : kNegative;
}

// -- check-grammar ----------------------------------------------------------

int cmd_check_grammar(const std::string& file, const std::string& format) {
  fgram::UnificationGrammar g = fgram::parse_grammar(read_input(file));
  bool ok = fgram::check_offline_parsability(g);
  if (want_json(format))
    std::cout << json{{"rules", g.rules.size()}, {"start", g.start}, {"offline_parsable", ok}}.dump(2) << "\n";
  else
    std::cout << (ok ? "offline-parsable" : "NOT offline-parsable (unit-rule cycle)") << "\n";
  return ok ? kPositive : kNegative;
}

// -- demo -------------------------------------------------------------------

const char* kDemoFormula =
    "subject ?x = ?y & predicate ?x = ?z & number ?y = number ?z & "
    "number subject ?x = singular & tense ?x = present";

const char* kDemoCorpus[] = {
    "", "(1)", "(-1)", "(1)(-1)", "(2)(-2)", "(1 -2)(2)", "(1 2)(-1)(-2)", "(1 2)(-1 2)(1 -2)",
    "(1 2)(-1 2)(1 -2)(-1 -2)", "(1 -2 3)(-1 2)(-3)", "(3 -1)(1)(-3 2)(-2)", "(11 -5)(5 4)(-4 -11)",
};

int cmd_demo(const std::string& format) {
  json out = json::object();
  std::ostringstream text;
  bool ok = true;

  text << "== Feature-graph satisfiability ==\n";
  fgram::Formula f = fgram::parse_formula(kDemoFormula);
  fgram::SatVerdict v = fgram::feature_graph_sat(f);
  std::string avm = v.yes() ? fgram::format_avm(fgram::graph_to_avm(*v.model)) : "";
  text << "formula: " << fgram::format_formula(f) << "\n"
       << "answer:  " << (v.yes() ? "Yes" : "No") << "\n"
       << "model:   " << avm << "\n";
  fgram::Formula clash = fgram::conjoin(f, fgram::parse_formula("number subject ?x = plural"));
  bool clash_yes = fgram::feature_graph_sat(clash).yes();
  text << "adding `number subject ?x = plural`: " << (clash_yes ? "Yes" : "No") << "\n";
  out["solve"] = {{"formula", fgram::format_formula(f)},
                  {"answer", v.yes() ? "Yes" : "No"},
                  {"model", avm},
                  {"with_plural", clash_yes ? "Yes" : "No"}};
  ok = ok && v.yes() && !clash_yes;

  text << "\n== AVM unification ==\n";
  json unifications = json::array();
  for (auto [a, b] : {std::pair{"[number: singular]", "[number: singular]"},
                      std::pair{"[number: singular]", "[number: plural]"},
                      std::pair{"[new: [1: [v: +]]]", "[assign: [v: +]]"}}) {
    auto u = fgram::unify(fgram::parse_avm(a), fgram::parse_avm(b));
    std::string r = u ? fgram::format_avm(*u) : "FAIL";
    text << a << " unify " << b << " = " << r << "\n";
    unifications.push_back({{"left", a}, {"right", b}, {"result", r}});
  }
  out["unify"] = unifications;

  text << "\n== Unification grammar G ==\n";
  const fgram::UnificationGrammar g = fgram::builtin_unification_grammar();
  const fgram::RegularGrammar bb = fgram::builtin_regular_grammar();
  json strings = json::array();
  for (const char* w : {"#10p#10q", "#10q", "#1p1q#1p"}) {
    bool backbone = fgram::backbone_recognize(bb, w);
    fgram::RecognitionResult r = fgram::recognize(g, w);
    text << "\"" << w << "\": backbone " << (backbone ? "ACCEPT" : "REJECT") << ", G "
         << (r.accepted ? "ACCEPT" : "REJECT");
    if (r.derivation) text << "  " << fgram::format_certificate(*r.derivation);
    text << "\n";
    strings.push_back({{"string", w},
                       {"backbone", backbone},
                       {"accepted", r.accepted},
                       {"certificate", r.derivation ? json(fgram::format_certificate(*r.derivation)) : json()}});
  }
  out["grammar"] = strings;

  text << "\n== SAT reduction vs. brute force ==\n";
  json table = json::array();
  std::size_t id = 0;
  for (const char* src : kDemoCorpus) {
    fgram::CnfFormula cnf = fgram::parse_dimacs(std::string(src).empty() ? "p cnf 0 0" : src);
    fgram::EquivalenceReport r = fgram::equivalence_check(cnf, g);
    ok = ok && r.agreement();
    text << fgram::format_report_line(cnf, r) << "\n";
    table.push_back(fgram::to_json(cnf, r, id++));
  }
  out["equivalence"] = table;

  if (want_json(format))
    std::cout << out.dump(2) << "\n";
  else
    std::cout << text.str();
  return ok ? kPositive : kNegative;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-graph unification, unification-grammar recognition and the SAT reduction"};
  app.require_subcommand(1, 1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  std::string file, file_b, grammar, w, check;
  std::vector<std::string> files;
  bool model = false, trace = false, cert = false;
  unsigned jobs = 1;
  std::size_t max_states = 0;

  auto* solve = app.add_subcommand("solve", "Decide whether a formula describes a feature-graph");
  solve->add_option("file", file, "Formula file ('-' for stdin)")->required();
  solve->add_flag("--model", model, "Print the described graph as an AVM");
  solve->add_flag("--trace", trace, "Print simplification rule firings");

  auto* unify = app.add_subcommand("unify", "Unify two attribute-value matrices");
  unify->add_option("a", file, "First AVM file")->required();
  unify->add_option("b", file_b, "Second AVM file")->required();

  auto* recognize = app.add_subcommand("recognize", "Recognize a string with a unification grammar");
  recognize->add_option("string", w, "Input string (`q` spells the negated-literal marker)")->required();
  recognize->add_option("--grammar", grammar, "Grammar file (default: builtin G)");
  recognize->add_flag("--cert", cert, "Print the certificate of an accepted string");
  recognize->add_option("--check", check, "Verify a certificate `d: i j ...` instead of searching");
  recognize->add_option("--max-states", max_states, "Search budget (0: unlimited)");

  auto* reduce = app.add_subcommand("reduce", "Print the string image of a CNF formula");
  reduce->add_option("file", file, "DIMACS or compact CNF file")->required();

  auto* verify = app.add_subcommand("verify", "Compare brute-force SAT with recognition of the image");
  verify->add_option("files", files, "DIMACS or compact CNF files")->required();
  verify->add_option("--grammar", grammar, "Grammar file (default: builtin G)");
  verify->add_option("--jobs", jobs, "Parallel workers")->check(CLI::Range(1u, 256u));
  verify->add_option("--max-states", max_states, "Recognizer budget per formula (0: unlimited)");

  auto* check_grammar = app.add_subcommand("check-grammar", "Check a grammar for unit-rule cycles");
  check_grammar->add_option("file", file, "Grammar file")->required();

  auto* demo = app.add_subcommand("demo", "Walk through the worked examples");

  for (auto* sub : {solve, unify, recognize, reduce, verify, check_grammar, demo})
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*solve) return cmd_solve(file, model, trace, format);
    if (*unify) return cmd_unify(file, file_b, format);
    if (*recognize) return cmd_recognize(grammar, w, cert, check, max_states, format);
    if (*reduce) return cmd_reduce(file, format);
    if (*verify) return cmd_verify(files, grammar, jobs, max_states, format);
    if (*check_grammar) return cmd_check_grammar(file, format);
    if (*demo) return cmd_demo(format);
  } catch (const fgram::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fgram::GrammarError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fgram::DerivationBoundExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
