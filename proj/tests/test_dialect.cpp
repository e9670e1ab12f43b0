#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "blade/dialect.hpp"
#include "blade/resources.hpp"
#include "blade/sexpr.hpp"
#include "blade/state.hpp"

using namespace blade;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(BLADE_SOURCE_DIR) + "/" + rel);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kTiny = R"(
(define (domain tiny)
  (:predicates (is-box ?x - item) (is-shelf ?x - item) (on ?x - item ?y - item) (held ?x - item))
  (:types is-box is-shelf)
  (:objects a b s)
  (:static (is-box a) (is-box b) (is-shelf s))
  (:action pick
   :parameters (?x - item ?y - item)
   :precondition (and (is-box ?x) (is-shelf ?y) (on ?x ?y))
   :effect (and (held ?x) (not (on ?x ?y)))
   :body (then (grasp ?x ?y) (move ?x)))
  (:action put
   :parameters (?x - item ?y - item)
   :precondition (and (is-box ?x) (is-shelf ?y) (held ?x))
   :effect (and (on ?x ?y) (not (held ?x)))
   :body (then (place ?x ?y))))
)";

}  // namespace

TEST(Sexpr, ReadsNestedListsAndSkipsComments) {
  auto v = read_sexprs("; note\n(a (b c) d) e");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].head(), "a");
  EXPECT_EQ(v[0].items[1].items.size(), 2u);
  EXPECT_TRUE(v[1].is_symbol("E"));
}

TEST(Sexpr, UnbalancedInputReportsPosition) {
  try {
    read_sexprs("(a\n (b c)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 1u);
  }
}

TEST(Model, NormalizeIdentifierIsIdempotent) {
  EXPECT_EQ(normalize_identifier("Lift_Block_Table"), "lift-block-table");
  EXPECT_EQ(normalize_identifier(normalize_identifier("A_b")), "a-b");
}

TEST(Dialect, ParsesTinyDomain) {
  auto m = parse_domain(kTiny);
  EXPECT_EQ(m.name, "tiny");
  ASSERT_EQ(m.schemas.size(), 2u);
  EXPECT_EQ(m.schemas[0].body.size(), 2u);
  EXPECT_TRUE(m.is_static("is-box"));
  EXPECT_FALSE(m.is_static("held"));
}

TEST(Dialect, PrintParseRoundTrip) {
  auto m = parse_domain(kTiny);
  EXPECT_EQ(parse_domain(print_domain(m)), m);
  auto c = parse_domain(*embedded_file("calvin.bdl"));
  EXPECT_EQ(parse_domain(print_domain(c)), c);
}

TEST(Dialect, UndeclaredPredicateNamesLine) {
  std::string text = kTiny;
  auto at = text.find(":effect (and (on ?x ?y)") + 13;
  text.replace(at, 10, "(gone ?x) ");
  try {
    parse_domain(text);
    FAIL() << "accepted an undeclared predicate";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("undeclared predicate gone"), std::string::npos);
    // count the line independently
    std::size_t line = 1 + std::count(text.begin(), text.begin() + text.find("(gone"), '\n');
    EXPECT_EQ(e.pos().line, line);
  }
}

TEST(Dialect, AliasIsCanonicalized) {
  auto m = parse_domain(slurp("data/calvin/calvin-behaviors.bdl"));
  const auto* s = m.find_schema("lift-block-table");
  ASSERT_NE(s, nullptr);
  EXPECT_TRUE(s->eff.contains({{"is-lifted", {"?block"}}, true}));
  EXPECT_EQ(m.canonical_predicate("lifted"), "is-lifted");
}

TEST(Dialect, UnderscoreNamesNormalize) {
  auto m = parse_domain(slurp("data/calvin/calvin-behaviors.bdl"));
  EXPECT_NE(m.find_schema("lift-block-slider"), nullptr);
  EXPECT_EQ(m.find_schema("lift_block_slider"), nullptr);
}

TEST(Dialect, ParsesProblem) {
  auto m = parse_domain(*embedded_file("calvin.bdl"));
  auto p = parse_problem(slurp("data/calvin/task1.problem"), m);
  EXPECT_EQ(p.goal.literals.size(), 2u);
  EXPECT_NE(std::find(p.init.begin(), p.init.end(), Atom{"is-turned-on", {"led"}}), p.init.end());
}

TEST(Dialect, FormulaRejectsContradiction) {
  auto m = parse_domain(kTiny);
  EXPECT_THROW(parse_formula("(and (held a) (not (held a)))", m), ParseError);
}

TEST(Dialect, LiteralsParse) {
  auto m = parse_domain(kTiny);
  auto l = parse_literals("(not (held a)) (on a s)", m);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_FALSE(l[0].positive);
}

TEST(Dialect, MechanismKeywordAccepted) {
  auto m = parse_domain(kTiny);
  m.schemas.clear();
  auto s = parse_schemas(
      "(:mechanism pick :parameters (?x - item ?y - item) :precondition (and (is-box ?x) (is-shelf ?y) (on ?x ?y)) "
      ":effect (and (held ?x)) :body (then (grasp ?x ?y) (move ?x)))",
      m);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].name, "pick");
}

TEST(Grounding, MatchesBruteForceEnumeration) {
  auto m = parse_domain(kTiny);
  auto objects = objects_of(m);
  auto ops = instantiate_all(m, objects);
  // Oracle: every ordered pair (box, shelf) for each of the two schemas.
  std::size_t boxes = 0, shelves = 0;
  for (const auto& f : m.static_facts) {
    boxes += f.predicate == "is-box";
    shelves += f.predicate == "is-shelf";
  }
  EXPECT_EQ(ops.size(), 2 * boxes * shelves);
  for (const auto& op : ops)
    for (const auto& l : op.pre_level1.literals) EXPECT_FALSE(m.is_static(l.atom.predicate));
}

TEST(Grounding, DistinctBindingForSameType) {
  auto m = parse_domain(*embedded_file("calvin.bdl"));
  for (const auto& op : instantiate_all(m, objects_of(m)))
    if (op.name == "stack-block") EXPECT_NE(op.args[0], op.args[1]);
}

TEST(Grounding, StaticTypeViolationThrows) {
  auto m = parse_domain(kTiny);
  EXPECT_THROW(ground_schema(m, m.schemas[0], {{"?x", "s"}, {"?y", "a"}}, objects_of(m)), GroundingError);
}

TEST(State, KleeneTables) {
  EXPECT_EQ(kleene_and(Truth::True, Truth::Unknown), Truth::Unknown);
  EXPECT_EQ(kleene_and(Truth::False, Truth::Unknown), Truth::False);
  EXPECT_EQ(kleene_not(Truth::Unknown), Truth::Unknown);
  AbstractState s;
  Atom a{"held", {"a"}};
  EXPECT_EQ(s.get(a), Truth::Unknown);
  s.close_world();
  EXPECT_EQ(s.get(a), Truth::False);
}

TEST(Validate, SkeletonAssemblesWithBehaviors) {
  auto skel = parse_domain(*embedded_file("calvin-skeleton.bdl"));
  auto behaviors = parse_domain(slurp("data/calvin/calvin-behaviors.bdl"));
  auto full = assemble(skel, behaviors.schemas);
  auto world = parse_domain(*embedded_file("calvin.bdl"));
  EXPECT_EQ(full.schemas.size(), 21u);
  for (const auto& s : world.schemas) {
    const auto* g = full.find_schema(s.name);
    ASSERT_NE(g, nullptr) << s.name;
    EXPECT_EQ(*g, s) << s.name;
  }
}
