// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each check recomputes its reference values independently.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli_runner.hpp"
#include "dense_oracles.hpp"
#include "exhaustive.hpp"
#include "infradep/builtin.hpp"
#include "infradep/checks.hpp"
#include "infradep/dsl.hpp"
#include "infradep/export.hpp"
#include "infradep/montecarlo.hpp"
#include "infradep/solvers.hpp"
#include "json_schema.hpp"
#include "precomposed.hpp"

using namespace infradep;
using namespace infradep::guards;
using nlohmann::json;

namespace {

// Collects failures for one criterion.
struct Check {
  std::vector<std::string> failures;
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream os;
      os << what << ": got " << format_number(got) << ", want " << format_number(want) << " (tol " << tol << ")";
      failures.push_back(os.str());
    }
  }
};

std::vector<Model> builtins() {
  std::vector<Model> out;
  for (const auto& info : builtin_models()) out.push_back(*builtin_model(info.name));
  return out;
}

Model two_state() {
  Model m;
  m.name = "two_state";
  m.variables = {VariableDecl::enumeration("s", {"up", "down"}, "up")};
  m.transitions = {
      Transition::timed("fail", RateExpr::literal(1.0), eq("s", "up"), {Assignment::set("s", "down")}),
      Transition::timed("repair", RateExpr::literal(3.0), eq("s", "down"), {Assignment::set("s", "up")}),
  };
  m.labels = {{"down", eq("s", "down")}};
  return m;
}

double rate_between(const Ctmc& c, std::size_t i, std::size_t j) {
  for (const auto& [k, q] : c.rows[i])
    if (k == j) return q;
  return 0.0;
}

std::string read_source(const std::string& rel) { return cli::slurp(cli::source_path(rel)); }

// 1 --------------------------------------------------------------------------
void claims(Check& c) {
  for (const auto& info : builtin_models()) {
    const std::string name(info.name);
    for (const auto& cl : run_claims(CompiledModel(*builtin_model(info.name))))
      c.require(cl.pass, name + " claim " + cl.id + ": " + cl.detail);
    auto r = cli::run({"validate", "--model", name, "--claims"});
    c.require(r.status == 0 && r.out.find("all claims hold") != std::string::npos,
              "validate --claims for " + name + " exited " + std::to_string(r.status));
  }
}

// 2 --------------------------------------------------------------------------
void reduction(Check& c) {
  for (const auto& m : builtins()) {
    CompiledModel cm(m);
    auto g = build_reachability_graph(cm);
    auto ch = eliminate_vanishing(g, &cm);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      double timed = 0.0;
      for (const auto& e : g.out_edges(ch.graph_index[i])) timed += e.value;
      c.near(ch.exit_rate(i) + ch.self_loop[i], timed, 1e-12, m.name + " outflow of " + cm.describe(ch.states[i]));
    }
  }
  CompiledModel a(accidental_model());
  CompiledModel pre(oracle::precomposed_accidental());
  auto ca = build_ctmc(a);
  auto cp = build_ctmc(pre);
  c.require(ca.size() == cp.size(), "precomposed chain has a different size");
  if (ca.size() != cp.size()) return;
  std::map<StateVector, std::size_t> where;
  for (std::size_t i = 0; i < cp.size(); ++i) where[cp.states[i]] = i;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (!where.count(ca.states[i])) {
      c.require(false, "state missing from precomposed chain: " + a.describe(ca.states[i]));
      continue;
    }
    for (std::size_t j = 0; j < ca.size(); ++j)
      c.near(rate_between(ca, i, j), rate_between(cp, where[ca.states[i]], where[ca.states[j]]), 1e-12,
             "Q[" + a.describe(ca.states[i]) + "][" + a.describe(ca.states[j]) + "]");
  }
}

// 3 --------------------------------------------------------------------------
void solvers(Check& c) {
  for (const auto& m : builtins()) {
    CompiledModel cm(m);
    auto ch = build_ctmc(cm);
    auto pi = steady_state(ch).probabilities;
    auto want = oracle::steady(ch);
    for (std::size_t i = 0; i < ch.size(); ++i) c.near(pi[i], want[i], 1e-7, m.name + " steady");
    for (double t : {0.5, 5.0, 50.0}) {
      auto p = transient(ch, t).probabilities;
      auto w = oracle::transient(ch, t);
      for (std::size_t i = 0; i < ch.size(); ++i) c.near(p[i], w[i], 1e-7, m.name + " transient t=" + format_number(t));
    }
    const auto* var = m.find_variable("elec") ? "elec" : "real_elec";
    auto target = matching_states(ch.states, cm.compile_predicate(eq(var, "e_lost")));
    const double exact = oracle::mtta(ch, target);
    c.near(mean_time_to_absorption(ch, target).value, exact, 1e-7 * std::max(1.0, exact), m.name + " mtta");
  }
  CompiledModel ts(two_state());
  auto ch = build_ctmc(ts);
  auto pi = steady_state(ch).probabilities;
  c.near(pi[0], 0.75, 1e-9, "two-state steady up");
  c.near(pi[1], 0.25, 1e-9, "two-state steady down");
  for (double t : {0.1, 1.0, 2.5}) {
    auto p = transient(ch, t).probabilities;
    c.near(p[1], 0.25 * (1 - std::exp(-4.0 * t)), 1e-9, "two-state transient t=" + format_number(t));
  }
  c.near(mean_time_to_absorption(ch, ch.labels.at("down")).value, 1.0, 1e-9, "two-state mean time to failure");
}

// 4 --------------------------------------------------------------------------
void simulation(Check& c) {
  CompiledModel m(accidental_model());
  auto ch = build_ctmc(m);
  const auto state1 = m.compile_predicate(m.model().find_label("state1")->predicate);
  const auto lost = m.compile_predicate(eq("elec", "e_lost"));
  const double exact_occ = label_probability(steady_state(ch), matching_states(ch.states, state1)).value;
  const double exact_mtta = mean_time_to_absorption(ch, matching_states(ch.states, lost)).value;

  ReplicationOptions o;
  o.replications = 200;
  o.seed = 20260101;
  auto occ = estimate_occupancy(m, state1, 2000.0, o, 200.0, "state1");
  c.require(occ.covers(exact_occ), "state1 occupancy " + format_number(occ.mean) + " +- " + format_number(occ.half_width) +
                                       " misses " + format_number(exact_occ));
  o.replications = 1000;
  auto hit = estimate_time_to(m, lost, 1e7, o, "e_lost");
  c.require(hit.censored == 0, "time-to e_lost had censored replications");
  c.require(hit.covers(exact_mtta), "time to e_lost " + format_number(hit.mean) + " +- " + format_number(hit.half_width) +
                                        " misses " + format_number(exact_mtta));

  // Same seed, same bytes: in-process, across thread counts, and via the CLI.
  o.replications = 50;
  o.threads = 1;
  const auto a = export_results_json({estimate_occupancy(m, state1, 500.0, o).to_result()});
  o.threads = 7;
  const auto b = export_results_json({estimate_occupancy(m, state1, 500.0, o).to_result()});
  c.require(a == b, "estimate depends on the thread count");
  for (std::uint64_t r = 0; r < 20; ++r) {
    std::ostringstream x, y;
    write_trace_csv(x, m, simulate(m, 1000.0, mix64(99, r)));
    write_trace_csv(y, m, simulate(m, 1000.0, mix64(99, r)));
    c.require(x.str() == y.str(), "trace " + std::to_string(r) + " differs between runs");
  }
  const std::vector<std::string> args = {"simulate", "--model", "accidental", "--occupancy", "state1", "--time-to",
                                         "elec == e_lost", "--horizon", "400", "--reps", "40", "--seed", "8"};
  auto r1 = cli::run(args), r2 = cli::run(args);
  c.require(r1.status == 0 && r1.out == r2.out, "CLI simulate output differs between identical runs");
}

// 5 --------------------------------------------------------------------------
void model_text(Check& c) {
  for (const auto& m : builtins()) {
    auto text = serialize_model(m);
    auto r = parse_model(text);
    c.require(r.ok() && *r.model == m, m.name + " does not round-trip");
    if (r.ok()) c.require(serialize_model(*r.model) == text, m.name + " formatting is not idempotent");
  }
  const std::vector<std::pair<std::string, Model>> shipped = {{"models/accidental.gsts", accidental_model()},
                                                              {"models/cascading_only.gsts", cascading_only_model()},
                                                              {"models/common_cause.gsts", common_cause_model()},
                                                              {"models/attack.gsts", attack_model()}};
  std::vector<std::string> corpus;
  for (const auto& [path, model] : shipped) {
    const auto text = read_source(path);
    corpus.push_back(text);
    auto r = parse_model(text);
    c.require(r.ok() && *r.model == model, path + " differs from its constructor");
  }
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    std::string text = corpus[static_cast<std::size_t>(i) % corpus.size()];
    for (int e = 0, n = 1 + static_cast<int>(rng() % 6); e < n && !text.empty(); ++e) {
      const auto pos = rng() % text.size();
      switch (rng() % 3) {
        case 0: text[pos] = static_cast<char>(rng() % 256); break;
        case 1: text.erase(pos, 1 + rng() % 8); break;
        default: text.insert(pos, 1, static_cast<char>(rng() % 256)); break;
      }
    }
    try {
      auto r = parse_model(text);
      if (r.ok()) {
        auto again = parse_model(serialize_model(*r.model));
        c.require(again.ok() && *again.model == *r.model, "fuzz case " + std::to_string(i) + " accepted but not stable");
      }
    } catch (const std::exception& e) {
      c.require(false, "fuzz case " + std::to_string(i) + " threw: " + e.what());
    }
  }
}

// 6 --------------------------------------------------------------------------
void tangible_counts(Check& c) {
  for (int K : {1, 2, 3, 4}) {
    ModelParams p;
    p.K = K;
    const std::vector<std::pair<Model, oracle::Domain>> cases = {
        {accidental_model(p), oracle::accidental_domain(0, K)},
        {cascading_only_model(p), oracle::accidental_domain(1, K)},
        {common_cause_model(p), oracle::accidental_domain(2, K)},
        {attack_model(p), oracle::attack_domain(K)},
    };
    for (const auto& [model, domain] : cases) {
      CompiledModel cm(model);
      auto g = build_reachability_graph(cm);
      auto want = oracle::explore(domain);
      const std::string tag = model.name + " K=" + std::to_string(K);
      c.require(g.num_tangible() == want.tangible, tag + " tangible " + std::to_string(g.num_tangible()) + " vs " +
                                                       std::to_string(want.tangible));
      c.require(g.num_states() == want.reachable, tag + " reachable states");
      c.require(g.edges.size() == want.edges, tag + " edges");
      c.require(build_ctmc(cm).size() == want.tangible, tag + " chain size");
    }
  }
}

// 7 --------------------------------------------------------------------------
void cli_contract(Check& c) {
  const auto fx = [](const std::string& n) { return cli::source_path("tests/fixtures/" + n); };
  const std::vector<std::pair<int, std::vector<std::string>>> codes = {
      {0, {"list-models"}},
      {1, {"validate", "--file", fx("bad_rate.gsts")}},
      {1, {"graph", "--file", fx("immediate_cycle.gsts")}},
      {2, {"validate", "--file", fx("syntax_errors.gsts")}},
      {3, {"solve", "--file", fx("absorbing_blackout.gsts"), "--measure", "steady"}},
      {64, {"solve", "--model", "accidental"}},
      {64, {"nonsense"}},
  };
  for (const auto& [want, args] : codes) {
    auto r = cli::run(args);
    c.require(r.status == want, args.front() + " ... exited " + std::to_string(r.status) + ", want " + std::to_string(want));
  }
  auto limit = cli::run({"graph", "--model", "attack"}, {"INFRADEP_STATE_LIMIT=5"});
  c.require(limit.status == 4, "state limit exit " + std::to_string(limit.status));

  auto schema_of = [](const std::string& n) { return json::parse(read_source("schemas/" + n + ".schema.json")); };
  const std::vector<std::pair<std::string, std::vector<std::string>>> outputs = {
      {"list-models", {"list-models", "--format", "json"}},
      {"graph", {"graph", "--model", "common-cause", "--format", "json"}},
      {"results", {"solve", "--model", "attack", "--measure", "steady", "--format", "json"}},
      {"results", {"simulate", "--model", "attack", "--occupancy", "deceived", "--horizon", "100", "--reps", "4", "--format", "json"}},
      {"validate", {"validate", "--model", "accidental", "--claims", "--format", "json"}},
      {"fmt", {"fmt", "--model", "attack", "--format", "json"}},
  };
  for (const auto& [schema, args] : outputs) {
    auto r = cli::run(args);
    try {
      auto errors = schema::validate(schema_of(schema), json::parse(r.out));
      c.require(r.status == 0 && errors.empty(), args.front() + " JSON: " + (errors.empty() ? "exit" : errors.front()));
    } catch (const std::exception& e) {
      c.require(false, args.front() + " JSON does not parse: " + e.what());
    }
  }

  CompiledModel m(accidental_model());
  auto ch = build_ctmc(m);
  auto mtta = mean_time_to_absorption(ch, matching_states(ch.states, predicate_from_text(m, "elec == e_lost")), {},
                                      "elec == e_lost");
  auto r = cli::run({"solve", "--model", "accidental", "--measure", "mtta", "--target", "elec == e_lost", "--format", "json"});
  c.require(r.out == export_results_json({mtta}), "CLI mtta differs from the library");
  ReplicationOptions o;
  o.replications = 10;
  o.seed = 4;
  auto est = estimate_occupancy(m, predicate_from_text(m, "state7"), 300.0, o, -1.0, "state7");
  r = cli::run({"simulate", "--model", "accidental", "--occupancy", "state7", "--horizon", "300", "--reps", "10", "--seed",
                "4", "--format", "json"});
  c.require(r.out == export_results_json({est.to_result()}), "CLI simulate differs from the library");
  r = cli::run({"graph", "--model", "accidental"});
  c.require(r.out == export_dot(build_reachability_graph(m), m), "CLI graph differs from the library");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"1 claim suites hold for every built-in model", claims},
      {"2 vanishing elimination preserves outflow and matches the precomposed chain", reduction},
      {"3 solvers agree with dense references and closed forms", solvers},
      {"4 Monte Carlo estimates cover exact values and are reproducible", simulation},
      {"5 model text round-trips, shipped files match, fuzzing is safe", model_text},
      {"6 tangible state counts match the exhaustive oracle", tangible_counts},
      {"7 CLI exit codes, JSON schemas and library agreement", cli_contract},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check c;
    try {
      run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "PASS " : "FAIL ") << name << '\n';
    for (std::size_t i = 0; i < c.failures.size() && i < 10; ++i) std::cout << "    " << c.failures[i] << '\n';
    failed += c.failures.empty() ? 0 : 1;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : "all criteria pass\n");
  return failed ? 1 : 0;
}
