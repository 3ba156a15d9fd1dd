#include <gtest/gtest.h>

#include <random>

#include "infradep/builtin.hpp"
#include "infradep/checks.hpp"

using namespace infradep;
using namespace infradep::guards;

namespace {

struct Built {
  CompiledModel model;
  ReachabilityGraph graph;
  explicit Built(Model m) : model(std::move(m)), graph(build_reachability_graph(model)) {}
};

void expect_all_pass(const std::vector<ClaimResult>& claims, const std::string& model) {
  ASSERT_FALSE(claims.empty()) << model;
  for (const auto& c : claims) EXPECT_TRUE(c.pass) << model << " " << c.id << ": " << c.detail;
}

}  // namespace

TEST(PathExists, WitnessIsAValidPath) {
  Built b(cascading_only_model());
  auto r = check_path_exists(b.graph, b.model, "state1", "state7", {"masked_passive", "e_failure_escal_sev"});
  ASSERT_TRUE(r.holds);
  ASSERT_TRUE(r.witness);
  const auto& w = *r.witness;
  ASSERT_EQ(w.states.size(), w.transitions.size() + 1);
  EXPECT_TRUE(b.model.label_holds(*b.model.label_index("state1"), b.graph.states[w.states.front()]));
  EXPECT_TRUE(b.model.label_holds(*b.model.label_index("state7"), b.graph.states[w.states.back()]));
  for (std::size_t i = 0; i < w.transitions.size(); ++i)
    EXPECT_EQ(apply_transition(b.model, b.graph.states[w.states[i]], w.transitions[i]), b.graph.states[w.states[i + 1]]);
  // via is a subsequence of the fired transitions.
  std::size_t k = 0;
  const std::vector<std::string> via = {"masked_passive", "e_failure_escal_sev"};
  for (auto t : w.transitions)
    if (k < via.size() && b.model.transition_name(t) == via[k]) ++k;
  EXPECT_EQ(k, via.size());
  EXPECT_FALSE(format_witness(b.graph, b.model, w).empty());
}

TEST(PathExists, MissingPath) {
  Model m;
  m.name = "fork";
  m.variables = {VariableDecl::enumeration("x", {"start", "good", "bad"}, "start")};
  m.transitions = {
      Transition::timed("g", RateExpr::literal(1.0), eq("x", "start"), {Assignment::set("x", "good")}),
      Transition::timed("b", RateExpr::literal(3.0), eq("x", "start"), {Assignment::set("x", "bad")}),
  };
  m.labels = {{"start", eq("x", "start")}, {"good", eq("x", "good")}, {"bad", eq("x", "bad")}};
  Built b(m);
  EXPECT_TRUE(check_path_exists(b.graph, b.model, "start", "bad").holds);
  EXPECT_FALSE(check_path_exists(b.graph, b.model, "good", "bad").holds);
  auto r = check_path_exists(b.graph, b.model, "start", "bad", {"g"});
  EXPECT_FALSE(r.holds);
  EXPECT_FALSE(r.witness);
  // A zero-length path when the endpoints overlap and nothing is required.
  auto same = check_path_exists(b.graph, b.model, "good", "good");
  ASSERT_TRUE(same.holds);
  EXPECT_TRUE(same.witness->transitions.empty());
}

TEST(PathExists, UnknownNames) {
  Built b(accidental_model());
  try {
    check_path_exists(b.graph, b.model, "state1", "nowhere");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
  }
  EXPECT_THROW(check_path_exists(b.graph, b.model, "state1", "state2", {"no_such"}), Error);
}

TEST(AllPaths, RestorationGroups) {
  Built b(accidental_model());
  const std::vector<std::vector<std::string>> groups = {{"i_restoration"}, {"e_restoration_fast", "e_restoration_slow"}};
  for (const char* from : {"state6", "state7", "state8"})
    EXPECT_TRUE(check_all_paths_contain(b.graph, b.model, from, "state1", groups).holds) << from;
  auto r = check_all_paths_contain(b.graph, b.model, "state2", "state1", {{"e_restoration_fast", "e_restoration_slow"}});
  EXPECT_FALSE(r.holds);
  ASSERT_TRUE(r.witness);
  for (auto t : r.witness->transitions) EXPECT_EQ(b.model.transition_name(t).rfind("e_restoration", 0), std::string::npos);
}

TEST(AllPaths, UnreachableTargetIsAnError) {
  Model m = cascading_only_model();
  m.labels.push_back({"weak", eq("info", "i_weakened")});
  Built w(m);
  try {
    check_all_paths_contain(w.graph, w.model, "state1", "weak", {{"i_restoration"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArg);
  }
}

TEST(SetUnreachable, Offenders) {
  Built b(cascading_only_model());
  EXPECT_TRUE(check_set_unreachable(b.graph, b.model.compile_predicate(eq("info", "i_weakened"))).holds);
  auto r = check_set_unreachable(b.graph, b.model.compile_predicate(eq("elec", "e_lost")));
  EXPECT_FALSE(r.holds);
  for (auto s : r.offenders) EXPECT_EQ(b.model.value_name(1, b.graph.states[s].values[1]), "e_lost");
}

TEST(ApparentConsistency, HoldsForAttackModel) {
  Built b(attack_model());
  EXPECT_TRUE(check_apparent_consistency(b.graph, b.model).holds);
}

TEST(ApparentConsistency, MutantReportsOffenders) {
  Model m = attack_model();
  // Detection forgets to copy the real electricity status.
  for (auto& t : m.transitions)
    if (t.name.rfind("detection_", 0) == 0) t.update.pop_back();
  Built b(m);
  auto r = check_apparent_consistency(b.graph, b.model);
  EXPECT_FALSE(r.holds);
  ASSERT_FALSE(r.offenders.empty());
  auto claims = run_claims(b.model);
  bool saw = false;
  for (const auto& c : claims)
    if (c.id == "apparent_resync") {
      saw = true;
      EXPECT_FALSE(c.pass);
      EXPECT_NE(c.detail.find("attack="), std::string::npos);
    }
  EXPECT_TRUE(saw);
}

TEST(ApparentConsistency, RejectsNonAttackModels) {
  Built b(accidental_model());
  try {
    check_apparent_consistency(b.graph, b.model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotAttackModel);
  }
}

TEST(DirectEdges, CommonCause) {
  Built b(common_cause_model());
  EXPECT_TRUE(check_direct_edges_into(b.graph, b.model, "state6", "state8").holds);
  Built a(accidental_model());
  EXPECT_FALSE(check_direct_edges_into(a.graph, a.model, "state6", "state8").holds);
}

TEST(FindEdges, RateOfEscalation) {
  Built b(cascading_only_model());
  auto edges = find_edges(b.graph, b.model, "state2", "state7", "e_failure_escal_sev");
  ASSERT_FALSE(edges.empty());
  for (auto e : edges) EXPECT_EQ(b.graph.edges[e].value, ModelParams{}.lambda_e);
  EXPECT_TRUE(find_edges(b.graph, b.model, "state2", "state7", "cfg_overflow").empty());
}

TEST(Claims, AllBuiltinsPass) {
  for (const auto& info : builtin_models()) {
    CompiledModel m(*builtin_model(info.name));
    EXPECT_TRUE(has_claims(m.model().name));
    expect_all_pass(run_claims(m), std::string(info.name));
  }
}

TEST(Claims, UnknownModelName) {
  Model m = accidental_model();
  m.name = "other";
  EXPECT_FALSE(has_claims("other"));
  EXPECT_THROW(run_claims(CompiledModel(m)), Error);
}

TEST(Claims, VerdictsDoNotDependOnRates) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> scale(0.05, 20.0);
  for (const auto& info : builtin_models()) {
    CompiledModel base(*builtin_model(info.name));
    const auto reference = run_claims(base);
    for (int trial = 0; trial < 5; ++trial) {
      ModelParams p;
      for (auto n : ModelParams::names())
        if (n != "K" && n != "rho" && n != "p8") p.set(n, p.get(n) * scale(rng));
      p.rho = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      p.p8 = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
      auto claims = run_claims(CompiledModel(*builtin_model(info.name, p)));
      ASSERT_EQ(claims.size(), reference.size());
      for (std::size_t i = 0; i < claims.size(); ++i) {
        EXPECT_EQ(claims[i].id, reference[i].id);
        EXPECT_EQ(claims[i].pass, reference[i].pass) << info.name << " " << claims[i].id;
      }
    }
  }
}

TEST(Claims, BrokenModelFailsClaims) {
  // Without e_fail_accumulate there is no way from state5 to state7.
  Model m = cascading_only_model();
  std::erase_if(m.transitions, [](const Transition& t) { return t.name == "e_fail_accumulate"; });
  auto claims = run_claims(CompiledModel(m));
  bool failed = false;
  for (const auto& c : claims)
    if (c.id == "accumulation_5_7") {
      failed = !c.pass;
      EXPECT_FALSE(c.detail.empty());
    }
  EXPECT_TRUE(failed);
}
