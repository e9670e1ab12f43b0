#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "blade/dialect.hpp"
#include "blade/planner.hpp"
#include "blade/resources.hpp"
#include "blade/worldsim.hpp"
#include "oracles.hpp"

using namespace blade;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(BLADE_SOURCE_DIR) + "/" + rel);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

AbstractState closed(const std::vector<Atom>& atoms) {
  AbstractState s;
  for (const auto& a : atoms) s.set(a, true);
  s.close_world();
  return s;
}

struct Fixture {
  DomainModel model = parse_domain(*embedded_file("calvin.bdl"));
  std::vector<GroundBehavior> ops = instantiate_all(model, objects_of(model));
};

Fixture& calvin() {
  static Fixture f;
  return f;
}

oracle::State to_set(const AbstractState& s) {
  auto t = s.true_atoms();
  return {t.begin(), t.end()};
}

}  // namespace

TEST(Evaluate, KleeneConjunction) {
  AbstractState s;
  Atom a{"is-open", {"drawer"}}, b{"is-turned-on", {"led"}};
  s.set(a, true);
  Formula f{{{a, true}, {b, true}}, {}};
  EXPECT_EQ(evaluate(s, f), Truth::Unknown);
  s.set(b, false);
  EXPECT_EQ(evaluate(s, f), Truth::False);
  EXPECT_THROW(evaluate(s, Formula{{{{"is-open", {"?d"}}, true}}, {}}), std::invalid_argument);
}

TEST(Apply, RequiresPrecondition) {
  auto& c = calvin();
  const auto* open = &*std::find_if(c.ops.begin(), c.ops.end(), [](const GroundBehavior& b) { return b.name == "open-drawer"; });
  auto s = closed({{"is-open", {"drawer"}}});
  EXPECT_THROW(apply(s, *open), PreconditionError);
  auto t = apply(closed({{"is-close", {"drawer"}}}), *open);
  EXPECT_EQ(t.get({"is-open", {"drawer"}}), Truth::True);
  EXPECT_EQ(t.get({"is-close", {"drawer"}}), Truth::False);
}

TEST(Plan, CalvinTask2IsSevenSteps) {
  auto& c = calvin();
  auto p = parse_problem(slurp("data/calvin/task2.problem"), c.model);
  auto s = closed(p.init);
  auto r = plan(s, p.goal, c.ops);
  ASSERT_TRUE(r.found());
  EXPECT_EQ(r.steps.size(), 7u);
  EXPECT_EQ(plan_bfs(s, p.goal, c.ops).steps.size(), 7u);
  auto sim = simulate_plan(s, r.steps);
  ASSERT_TRUE(sim.ok());
  EXPECT_EQ(evaluate(project(sim.final_state), p.goal), Truth::True);
}

TEST(Plan, CalvinTask3IsSixSteps) {
  auto& c = calvin();
  auto p = parse_problem(slurp("data/calvin/task3.problem"), c.model);
  auto s = closed(p.init);
  auto r = plan(s, p.goal, c.ops);
  ASSERT_TRUE(r.found());
  EXPECT_EQ(r.steps.size(), 6u);
  EXPECT_EQ(oracle::bfs(to_set(s), p.goal, c.ops), 6u);
}

TEST(Plan, SatisfiedGoalGivesEmptyPlan) {
  auto& c = calvin();
  auto s = closed({{"is-open", {"drawer"}}});
  auto r = plan(s, Formula{{{{"is-open", {"drawer"}}, true}}, {}}, c.ops);
  EXPECT_TRUE(r.found());
  EXPECT_TRUE(r.steps.empty());
}

TEST(Plan, UnreachableGoal) {
  auto& c = calvin();
  Formula goal{{{{"is-turned-on", {"led"}}, true}}, {}};
  std::vector<GroundBehavior> none;
  EXPECT_EQ(plan(closed({}), goal, none).status, PlanStatus::Unreachable);
  EXPECT_EQ(h_ff(closed({}), goal, none), kInfinite);
  std::vector<GroundBehavior> off;
  for (const auto& o : c.ops)
    if (o.name != "turn-on-led") off.push_back(o);
  EXPECT_EQ(plan(closed({{"is-turned-off", {"led"}}}), goal, off).status, PlanStatus::Unreachable);
}

TEST(Plan, FallbackAfterBudget) {
  auto& c = calvin();
  auto p = parse_problem(slurp("data/calvin/task2.problem"), c.model);
  PlannerConfig cfg;
  cfg.node_budget = 1;
  auto r = plan(closed(p.init), p.goal, c.ops, cfg);
  ASSERT_TRUE(r.found());
  EXPECT_TRUE(r.used_fallback);
  EXPECT_EQ(r.steps.size(), 7u);  // breadth-first is optimal
}

TEST(Heuristic, AgainstBruteForceOnSubDomain) {
  auto& c = calvin();
  std::set<Atom> keep(oracle::kSub.begin(), oracle::kSub.end());
  auto ops = oracle::restrict_ops(c.ops, keep);
  ASSERT_FALSE(ops.empty());
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> pick(0, oracle::kSub.size() - 1), len(1, 3);
  for (int i = 0; i < 60; ++i) {
    std::vector<Atom> on;
    for (const auto& a : oracle::kSub)
      if (coin(rng)) on.push_back(a);
    Formula goal;
    std::set<Atom> used;
    for (std::size_t k = len(rng); k > 0; --k) {
      const auto& a = oracle::kSub[pick(rng)];
      if (used.insert(a).second) goal.literals.push_back({a, coin(rng)});
    }
    auto s = closed(on);
    auto set = to_set(s);
    auto facts = oracle::facts_of(set, oracle::kSub);
    auto h = h_ff(s, goal, ops);
    auto hp = oracle::h_plus(facts, goal, ops);
    EXPECT_EQ(h == kInfinite, !oracle::relaxed_reachable(facts, goal, ops));
    if (hp) EXPECT_LE(*hp, h);
    auto opt = oracle::bfs(set, goal, ops);
    auto r = plan(s, goal, ops);
    EXPECT_EQ(r.found(), opt.has_value());
    if (r.found()) {
      EXPECT_GE(r.steps.size(), *opt);
      auto sim = simulate_plan(s, r.steps);
      ASSERT_TRUE(sim.ok());
      EXPECT_EQ(evaluate(project(sim.final_state), goal), Truth::True);
      EXPECT_EQ(plan_bfs(s, goal, ops).steps.size(), *opt);
    }
  }
}

TEST(Simulate, ReportsFirstFailure) {
  auto& c = calvin();
  auto p = parse_problem(slurp("data/calvin/task2.problem"), c.model);
  auto r = plan(closed(p.init), p.goal, c.ops);
  // the final placement needs a held block
  Plan bad = {r.steps.front(), r.steps.back()};
  auto sim = simulate_plan(closed(p.init), bad);
  ASSERT_FALSE(sim.ok());
  EXPECT_EQ(*sim.failed_index, 1u);
}

TEST(Level2, ClearsBlockingObject) {
  const World& w = builtin_world("calvin");
  Atom blocking{"is-blocking", {"red-block", "slider-path-left"}};
  auto s = closed({{"is-on", {"red-block", "table"}}, {"is-on", {"blue-block", "table"}},
                   {"is-on", {"pink-block", "table"}}, {"is-close", {"drawer"}}, {"is-slider-right", {"slider"}},
                   {"is-turned-off", {"led"}}, {"is-turned-off", {"lightbulb"}}, blocking});
  const auto* move = w.find_op("move-slider-left", {"slider"});
  ASSERT_NE(move, nullptr);
  EXPECT_EQ(evaluate(s, move->pre_level2), Truth::False);
  auto r = resolve_level2(s, *move, w.ops);
  ASSERT_EQ(r.status, PlanStatus::Found);
  ASSERT_FALSE(r.prefix.empty());
  auto sim = simulate_plan(s, r.prefix);
  ASSERT_TRUE(sim.ok());
  EXPECT_EQ(evaluate(project(sim.final_state), move->pre_level2), Truth::True);
  EXPECT_EQ(evaluate(project(sim.final_state), move->pre_level1), Truth::True);

  auto clear = s;
  clear.set(blocking, false);
  auto none = resolve_level2(clear, *move, w.ops);
  EXPECT_EQ(none.status, PlanStatus::Found);
  EXPECT_TRUE(none.prefix.empty());
}

TEST(Reveals, HiddenBlockPlansThroughOpening) {
  const World& w = builtin_world("calvin");
  AbstractState belief;
  for (const auto& a : w.universe) {
    bool mentions_blue = std::find(a.args.begin(), a.args.end(), "blue-block") != a.args.end();
    if (!mentions_blue) belief.set(a, false);
  }
  for (Atom a : std::vector<Atom>{{"is-on", {"red-block", "table"}}, {"is-on", {"pink-block", "table"}},
                                  {"is-close", {"drawer"}}, {"is-slider-right", {"slider"}},
                                  {"is-turned-off", {"led"}}, {"is-turned-off", {"lightbulb"}}})
    belief.set(a, true);
  auto hidden = hidden_objects(belief, w.model, w.ops);
  ASSERT_EQ(hidden, std::vector<std::string>{"blue-block"});

  RefutedReveals refuted;
  auto ops = with_optimistic_reveals(w.ops, w.model, hidden, refuted);
  Formula goal{{{{"is-on", {"blue-block", "table"}}, true}}, {}};
  auto r = plan(belief, goal, ops);
  ASSERT_TRUE(r.found());
  EXPECT_EQ(r.steps.front().name, "open-drawer");

  // the drawer is believed open and the block still unseen: that rule is out
  belief.set({"is-close", {"drawer"}}, false);
  belief.set({"is-open", {"drawer"}}, true);
  refute_reveals(belief, w.model, hidden, refuted);
  EXPECT_TRUE(refuted.contains({0, "blue-block"}));
  auto again = with_optimistic_reveals(w.ops, w.model, hidden, refuted);
  auto r2 = plan(belief, goal, again);
  ASSERT_TRUE(r2.found());
  EXPECT_NE(r2.steps.front().name, "open-drawer");
}
