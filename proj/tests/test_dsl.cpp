#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "infradep/builtin.hpp"
#include "infradep/dsl.hpp"

using namespace infradep;
using namespace infradep::guards;

namespace {

std::string read_file(const std::string& rel) {
  std::ifstream f(std::string(INFRADEP_SOURCE_DIR) + "/" + rel, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kMinimal = R"(model tiny {
  var x : {a, b} init a;
  timed t rate 2 when x == a -> { x := b; };
})";

}  // namespace

TEST(Dsl, MinimalModel) {
  auto r = parse_model(kMinimal);
  ASSERT_TRUE(r.ok()) << (r.errors.empty() ? "" : format_error(r.errors[0]));
  const Model& m = *r.model;
  EXPECT_EQ(m.name, "tiny");
  ASSERT_EQ(m.variables.size(), 1u);
  EXPECT_EQ(m.variables[0], VariableDecl::enumeration("x", {"a", "b"}, "a"));
  ASSERT_EQ(m.transitions.size(), 1u);
  EXPECT_EQ(m.transitions[0], Transition::timed("t", RateExpr::literal(2.0), eq("x", "a"), {Assignment::set("x", "b")}));
}

TEST(Dsl, EveryConstruct) {
  const char* text = R"(# leading comment
model full {
  param r = 0.5;   # trailing comment
  param p = 2.5e-1;
  var x : {a, b, c} init b;
  var n : [-2..4] init -1;
  timed t1 rate r * (1 - p) * 3 when !(x == a || x == c) && n < 4 -> { n := n + 1; x := a; } tags(cascading, common_cause);
  timed t2 rate p when n >= -1 && true -> { n := n - 1; } tags(restoration);
  immediate i1 prio 3 weight 0.25 when x == a && n != 0 && !false -> { x := c; };
  label lab := x == c || (n > 0 && n <= 3);
}
)";
  auto r = parse_model(text);
  ASSERT_TRUE(r.ok()) << (r.errors.empty() ? "validation" : format_error(r.errors[0]));
  const Model& m = *r.model;
  EXPECT_EQ(m.parameters[1].value, 0.25);
  EXPECT_EQ(m.variables[1], VariableDecl::counter("n", -2, 4, -1));
  const auto& t1 = m.transitions[0];
  EXPECT_EQ(t1.rate, RateExpr::parameter("r").times(RateFactor::complement(1.0, "p")).times(RateFactor::literal(3.0)));
  EXPECT_TRUE(t1.tags.contains(Tag::Cascading));
  EXPECT_TRUE(t1.tags.contains(Tag::CommonCause));
  EXPECT_EQ(t1.guard, all_of({negate(any_of({eq("x", "a"), eq("x", "c")})), lt("n", 4)}));
  const auto& i1 = m.transitions[2];
  EXPECT_FALSE(i1.is_timed());
  EXPECT_EQ(i1.priority, 3);
  EXPECT_EQ(i1.weight, 0.25);
  EXPECT_EQ(m.labels[0].predicate, any_of({eq("x", "c"), all_of({gt("n", 0), le("n", 3)})}));
}

TEST(Dsl, UndeclaredIdentifierPosition) {
  auto r = parse_model(read_file("tests/fixtures/undeclared.gsts"));
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].code, ParseErrorCode::UndeclaredIdent);
  EXPECT_EQ(r.errors[0].span.line, 3u);
  EXPECT_EQ(r.errors[0].span.column, 35u);
  EXPECT_EQ(r.errors[0].span.length, 1u);
  EXPECT_EQ(format_error(r.errors[0], "f.gsts").rfind("f.gsts:3:35: UNDECLARED_IDENT:", 0), 0u);
}

TEST(Dsl, RecoversAndReportsSeveralSyntaxErrors) {
  auto r = parse_model(read_file("tests/fixtures/syntax_errors.gsts"));
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.errors.size(), 2u);
  EXPECT_EQ(r.errors[0].code, ParseErrorCode::UnexpectedToken);
  EXPECT_EQ(r.errors[0].span.line, 4u);
  EXPECT_EQ(r.errors[0].span.column, 3u);
  EXPECT_EQ(r.errors[1].span.line, 5u);
  EXPECT_EQ(r.errors[1].span.column, 16u);
}

TEST(Dsl, ErrorCodes) {
  auto code_of = [](const std::string& body) {
    auto r = parse_model("model m {\n  var x : {a, b} init a;\n  var n : [0..3] init 0;\n" + body + "\n}\n");
    EXPECT_FALSE(r.errors.empty()) << body;
    return r.errors.empty() ? ParseErrorCode::UnexpectedToken : r.errors[0].code;
  };
  EXPECT_EQ(code_of("  timed t rate 1 when x = a -> { x := b; };"), ParseErrorCode::UnexpectedToken);
  // A name outside the variable's enum is a type error, not an undeclared one.
  EXPECT_EQ(code_of("  timed t rate 1 when x == a -> { x := zz; };"), ParseErrorCode::TypeMismatch);
  EXPECT_EQ(code_of("  timed t rate 1 when n < 3 -> { n := k + 1; };"), ParseErrorCode::UndeclaredIdent);
  EXPECT_EQ(code_of("  timed t rate 1 when n == a -> { x := b; };"), ParseErrorCode::TypeMismatch);
  EXPECT_EQ(code_of("  var x : {c} init c;\n  timed t rate 1 when true -> { };"), ParseErrorCode::DuplicateName);
  EXPECT_EQ(code_of("  timed t rate 1 when x == a -> { x := b; } tags(bogus);"), ParseErrorCode::BadLiteral);
  EXPECT_EQ(code_of("  timed t rate 1e999 when x == a -> { x := b; };"), ParseErrorCode::BadLiteral);
  EXPECT_EQ(code_of("  timed t rate 1 when n < 3 -> { n := n + 2; };"), ParseErrorCode::BadLiteral);
  EXPECT_EQ(code_of("  timed t rate 1 when n < 99999999999999999999 -> { n := n + 1; };"), ParseErrorCode::BadLiteral);
}

TEST(Dsl, ValidationIssuesCarrySpans) {
  auto r = parse_model(read_file("tests/fixtures/bad_rate.gsts"));
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.errors.empty());
  ASSERT_TRUE(r.validation.has(IssueCode::InvalidRate));
  for (const auto& i : r.validation.issues) {
    ASSERT_TRUE(i.span.has_value());
    EXPECT_GT(i.span->line, 1u);
  }
}

TEST(Dsl, SerializeThenParseIsIdentity) {
  for (const auto& info : builtin_models()) {
    Model m = *builtin_model(info.name);
    auto text = serialize_model(m);
    auto r = parse_model(text);
    ASSERT_TRUE(r.ok()) << info.name;
    EXPECT_EQ(*r.model, m) << info.name;
    EXPECT_EQ(serialize_model(*r.model), text) << info.name;
  }
}

TEST(Dsl, RoundTripWithOddNumbers) {
  ModelParams p;
  p.lambda_e = 0.1 + 0.2;
  p.mu_i = 1e-300;
  p.mu_e = 123456789.125;
  p.rho = 1.0 / 3.0;
  Model m = accidental_model(p);
  auto r = parse_model(serialize_model(m));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.model, m);
}

TEST(Dsl, FormattingIsIdempotent) {
  auto first = parse_model(read_file("tests/fixtures/two_state.gsts"));
  ASSERT_TRUE(first.ok());
  const auto once = serialize_model(*first.model);
  const auto twice = serialize_model(*parse_model(once).model);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once, read_file("tests/fixtures/two_state.gsts"));
}

TEST(Dsl, ShippedFilesEqualConstructors) {
  const std::vector<std::pair<std::string, Model>> shipped = {
      {"models/accidental.gsts", accidental_model()},
      {"models/cascading_only.gsts", cascading_only_model()},
      {"models/common_cause.gsts", common_cause_model()},
      {"models/attack.gsts", attack_model()},
  };
  for (const auto& [path, model] : shipped) {
    const auto text = read_file(path);
    auto r = parse_model(text);
    ASSERT_TRUE(r.ok()) << path;
    EXPECT_EQ(*r.model, model) << path;
    EXPECT_EQ(serialize_model(model), text) << path;
  }
}

TEST(Dsl, GuardParsingAndPrinting) {
  EXPECT_EQ(parse_guard("elec == e_lost && n_cfg > 0"), all_of({eq("elec", "e_lost"), gt("n_cfg", 0)}));
  EXPECT_EQ(parse_guard("a == b || c == d && e == f"), any_of({eq("a", "b"), all_of({eq("c", "d"), eq("e", "f")})}));
  EXPECT_EQ(parse_guard("n >= -3"), ge("n", -3));
  EXPECT_THROW(parse_guard("a == "), Error);
  EXPECT_THROW(parse_guard("a == b extra"), Error);
  EXPECT_EQ(guard_to_string(negate(all_of({eq("a", "b"), eq("c", "d")}))), "!(a == b && c == d)");
  EXPECT_EQ(guard_to_string(all_of({any_of({eq("a", "b"), eq("c", "d")}), eq("e", "f")})), "(a == b || c == d) && e == f");
}

TEST(Dsl, PredicateFromText) {
  CompiledModel m(accidental_model());
  auto s = m.make_state({{"elec", "e_lost"}});
  EXPECT_TRUE(predicate_from_text(m, "elec == e_lost").eval(s.values));
  EXPECT_TRUE(predicate_from_text(m, "state1").eval(m.initial_state().values));
  try {
    predicate_from_text(m, "state99");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
  }
  EXPECT_THROW(predicate_from_text(m, "elec == nothing"), Error);
  EXPECT_THROW(predicate_from_text(m, "elec =="), Error);
}

namespace {

Guard random_guard(std::mt19937_64& rng, int depth) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> enums = {
      {"info", {"i_working", "passive_latent", "active_latent", "partial_i_outage", "i_weakened"}},
      {"elec", {"e_working", "e_weakened", "partial_e_outage", "e_lost"}}};
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 3 : 7);
  const int k = pick(rng);
  if (k == 0) return rng() % 2 ? always() : never();
  if (k == 1 || k == 2) {
    const auto& [var, values] = enums[rng() % enums.size()];
    return compare(var, rng() % 2 ? CmpOp::Eq : CmpOp::Ne, values[rng() % values.size()]);
  }
  if (k == 3) return compare("n_cfg", static_cast<CmpOp>(rng() % 6), static_cast<std::int64_t>(rng() % 3));
  if (k == 4) return negate(random_guard(rng, depth - 1));
  Guard g;
  g.kind = k == 5 ? Guard::Kind::And : Guard::Kind::Or;
  const int n = 2 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) g.children.push_back(random_guard(rng, depth - 1));
  return g;
}

}  // namespace

TEST(Dsl, RandomGuardsRoundTrip) {
  std::mt19937_64 rng(12345);
  Model base = accidental_model();
  for (int i = 0; i < 2000; ++i) {
    Guard g = random_guard(rng, 4);
    const auto text = guard_to_string(g);
    EXPECT_EQ(parse_guard(text), g) << text;
    Model m = base;
    m.labels.push_back({"random", g});
    auto r = parse_model(serialize_model(m));
    ASSERT_TRUE(r.ok()) << text;
    EXPECT_EQ(*r.model, m) << text;
  }
}

TEST(Dsl, FuzzNeverCrashes) {
  std::vector<std::string> seeds;
  for (const char* f : {"models/accidental.gsts", "models/attack.gsts", "tests/fixtures/two_state.gsts",
                        "tests/fixtures/syntax_errors.gsts"})
    seeds.push_back(read_file(f));
  const std::string alphabet = "{}()[];:=!<>&|-+*.,#\n \t0123456789abexyz_";
  std::mt19937_64 rng(2024);
  std::size_t parsed_ok = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string text = seeds[static_cast<std::size_t>(i) % seeds.size()];
    const int edits = 1 + static_cast<int>(rng() % 8);
    for (int e = 0; e < edits && !text.empty(); ++e) {
      const std::size_t pos = rng() % text.size();
      switch (rng() % 5) {
        case 0: text[pos] = static_cast<char>(rng() % 256); break;
        case 1: text.erase(pos, 1 + rng() % 16); break;
        case 2: text.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
        case 3: text.insert(pos, text.substr(rng() % text.size(), rng() % 32)); break;
        default: text.resize(pos); break;
      }
    }
    if (i % 100 == 0) text = std::string(200, '(') + text;
    ParseResult r;
    ASSERT_NO_THROW(r = parse_model(text)) << "case " << i;
    if (r.ok()) {
      ++parsed_ok;
      // Anything accepted must survive a round trip.
      auto again = parse_model(serialize_model(*r.model));
      ASSERT_TRUE(again.ok()) << "case " << i;
      EXPECT_EQ(*again.model, *r.model);
    } else {
      for (const auto& e : r.errors) {
        EXPECT_GE(e.span.line, 1u);
        EXPECT_GE(e.span.column, 1u);
        EXPECT_FALSE(e.message.empty());
      }
    }
  }
  EXPECT_GT(parsed_ok, 0u);
}

TEST(Dsl, DeepNestingIsAnErrorNotACrash) {
  std::string deep = "model d {\n  var x : {a} init a;\n  timed t rate 1 when " + std::string(100000, '(') + "x == a" +
                     std::string(100000, ')') + " -> { };\n}\n";
  auto r = parse_model(deep);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.errors.empty());
}
