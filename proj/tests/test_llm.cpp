#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "blade/bench.hpp"
#include "blade/dialect.hpp"
#include "blade/llm.hpp"
#include "blade/resources.hpp"

using namespace blade;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string src(const std::string& rel) { return std::string(BLADE_SOURCE_DIR) + "/" + rel; }

ContactPrimitive P(PrimitiveKind k, std::vector<std::optional<std::string>> a = {}) { return ContactPrimitive::make(k, a); }

GenerationContext place_ctx() {
  GenerationContext c;
  c.behavior_label = "place_in_drawer";
  c.primitive_sequences = {{P(PrimitiveKind::Place, {"red-block", "drawer"})}};
  c.previous_tasks = {"open_drawer", "lift_block_table"};
  return c;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) ++n;
  return n;
}

// Answers from the recorded CALVIN fixtures, except for scripted labels.
class Scripted : public LlmClient {
 public:
  std::map<std::string, std::vector<std::string>> overrides;
  std::map<std::string, std::size_t> calls;
  std::string complete(const PromptBundle& p, std::size_t attempt) override {
    ++calls[p.behavior];
    auto it = overrides.find(p.behavior);
    if (it != overrides.end()) return it->second[std::min(attempt, it->second.size() - 1)];
    return slurp(src("data/fixtures/calvin/" + p.behavior + "/0.txt"));
  }
};

struct Inputs {
  DomainConfig cfg = load_domain_config(src("data/calvin/calvin-config.json"));
  GenerationInputs in = make_generation_inputs(cfg);
};

Inputs& calvin_inputs() {
  static Inputs i;
  return i;
}

std::string bad_place() {
  auto text = slurp(src("data/fixtures/calvin/place_in_drawer/0.txt"));
  auto at = text.find("(is-open ?drawer)");
  text.replace(at, 17, "(is-close ?drawer)");
  return text;
}

}  // namespace

TEST(Prompt, BehaviorPromptLayout) {
  auto p = build_behavior_prompt(place_ctx());
  ASSERT_EQ(p.system_parts.size(), 4u);
  auto sys = p.system_text();
  EXPECT_NE(sys.find(slurp(src("data/prompts/primitives.txt")).substr(0, 80)), std::string::npos);
  EXPECT_NE(sys.find("**Primitive Actions:**"), std::string::npos);
  EXPECT_EQ(p.user_part.find("**Current Task:** place_in_drawer"), 0u);
  EXPECT_NE(p.user_part.find(R"({"name": "place", "arguments": ["red_block", "drawer"]})"), std::string::npos);
  EXPECT_NE(p.user_part.find("**Previous Tasks:** open_drawer, lift_block_table"), std::string::npos);
  EXPECT_EQ(count(p.user_part, "<code name=\"primitive_sequence\">"), 1u);
}

TEST(Prompt, Deterministic) {
  auto a = build_behavior_prompt(place_ctx());
  auto b = build_behavior_prompt(place_ctx());
  EXPECT_EQ(a.system_text(), b.system_text());
  EXPECT_EQ(a.user_part, b.user_part);
}

TEST(Prompt, RejectsEmptyInputs) {
  auto c = place_ctx();
  c.primitive_sequences.clear();
  EXPECT_THROW(build_behavior_prompt(c), LlmError);
  c = place_ctx();
  c.behavior_label.clear();
  EXPECT_THROW(build_behavior_prompt(c), LlmError);
}

TEST(Prompt, KitchenObjectsAndPredicatesReplaceCalvin) {
  auto c = place_ctx();
  c.objects = {"A kettle. It can be filled with water."};
  c.predicate_list = {{"(is-filled ?x - item)", "?x holds water"}};
  auto sys = build_behavior_prompt(c).system_text();
  EXPECT_NE(sys.find("A kettle. It can be filled with water."), std::string::npos);
  EXPECT_NE(sys.find("- (is-filled ?x - item): ?x holds water"), std::string::npos);
  EXPECT_EQ(sys.find("slider-path"), std::string::npos);
}

TEST(Prompt, PrimitiveSequenceRendering) {
  auto text = render_primitive_sequence({P(PrimitiveKind::Grasp, {"red-block", "table"}), P(PrimitiveKind::Move, {"red-block"})});
  EXPECT_EQ(text.find("<code name=\"primitive_sequence\">"), 0u);
  EXPECT_NE(text.find(R"({"name": "grasp", "arguments": ["red_block", "table"]})"), std::string::npos);
  EXPECT_NE(text.find("</code>"), std::string::npos);
}

TEST(Prompt, PredicatePromptListsEveryTask) {
  std::vector<std::string> labels;
  for (int i = 0; i < 34; ++i) labels.push_back("task_" + std::to_string(i));
  auto p = build_predicate_prompt({}, labels);
  EXPECT_EQ(p.user_part.find("**Task**"), 0u);
  for (const auto& l : labels) EXPECT_EQ(count(p.user_part, l + "\n") + count(p.user_part, l + "\r"), 1u) << l;
  EXPECT_NE(p.system_text().find("You are a helpful agent"), std::string::npos);
}

TEST(Parse, MechanismBlockWithChatter) {
  auto m = parse_domain(*embedded_file("calvin-skeleton.bdl"));
  auto r = parse_mechanism(slurp(src("data/fixtures/calvin/place_in_drawer/0.txt")), m);
  ASSERT_TRUE(r.parsed) << (r.parse_errors.empty() ? "" : r.parse_errors[0]);
  EXPECT_EQ(r.parsed->name, "place-in-drawer");
  EXPECT_TRUE(r.parse_errors.empty());
}

TEST(Parse, MissingAndBrokenBlocks) {
  auto m = parse_domain(*embedded_file("calvin-skeleton.bdl"));
  auto none = parse_mechanism("I would place the block.", m);
  EXPECT_FALSE(none.parsed);
  ASSERT_FALSE(none.parse_errors.empty());
  EXPECT_EQ(none.parse_errors[0], "missing-block");

  auto open = parse_mechanism("<code name=\"mechanism\">(:mechanism x", m);
  EXPECT_FALSE(open.parsed);
  EXPECT_FALSE(open.parse_errors.empty());

  auto text = slurp(src("data/fixtures/calvin/place_in_drawer/0.txt"));
  text.replace(text.find("(is-lifted ?block) (is-open"), 18, "(is-floating ?block)");
  auto undeclared = parse_mechanism(text, m);
  EXPECT_FALSE(undeclared.parsed);
  ASSERT_FALSE(undeclared.parse_errors.empty());
  EXPECT_NE(undeclared.parse_errors[0].find("is-floating"), std::string::npos);
}

TEST(Parse, SecondBlockWarns) {
  auto m = parse_domain(*embedded_file("calvin-skeleton.bdl"));
  auto one = slurp(src("data/fixtures/calvin/place_in_drawer/0.txt"));
  auto r = parse_mechanism(one + one, m);
  EXPECT_TRUE(r.parsed);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Fixtures, ReplayAndFallback) {
  FixtureClient client(src("data/fixtures"), "calvin");
  auto p = build_behavior_prompt(place_ctx());
  auto first = client.complete(p, 0);
  EXPECT_EQ(first, client.complete(p, 3));
  auto c = place_ctx();
  c.behavior_label = "juggle_blocks";
  EXPECT_THROW(client.complete(build_behavior_prompt(c), 0), LlmError);
}

TEST(Generate, RecordedFixturesRebuildWorldModel) {
  auto& i = calvin_inputs();
  FixtureClient client(i.cfg.fixtures, "calvin");
  auto r = generate_with_verification(i.in.contexts, client, i.cfg.skeleton, i.in.corpus);
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.verification.flagged.empty());
  const auto world = parse_domain(*embedded_file("calvin.bdl"));
  for (const auto& s : world.schemas) {
    const auto* g = r.model.find_schema(s.name);
    ASSERT_NE(g, nullptr) << s.name;
    EXPECT_EQ(*g, s) << s.name;
  }
}

TEST(Generate, FlaggedLabelIsResampled) {
  auto& i = calvin_inputs();
  Scripted client;
  client.overrides["place_in_drawer"] = {bad_place(), slurp(src("data/fixtures/calvin/place_in_drawer/0.txt"))};
  auto r = generate_with_verification(i.in.contexts, client, i.cfg.skeleton, i.in.corpus);
  ASSERT_TRUE(r.ok());
  const auto& o = r.labels.at("place_in_drawer");
  EXPECT_TRUE(o.accepted);
  EXPECT_EQ(o.retries, 1u);
  ASSERT_EQ(o.attempts.size(), 2u);
  EXPECT_FALSE(o.attempts[0].errors.empty());
  EXPECT_TRUE(o.attempts[1].errors.empty());
  EXPECT_EQ(client.calls["place_in_drawer"], 2u);
  EXPECT_EQ(client.calls["open_drawer"], 1u);
}

TEST(Generate, RetriesAreBounded) {
  auto& i = calvin_inputs();
  Scripted client;
  client.overrides["place_in_drawer"] = {bad_place()};
  client.overrides["turn_on_led"] = {"no code here"};
  auto r = generate_with_verification(i.in.contexts, client, i.cfg.skeleton, i.in.corpus, 2);
  EXPECT_FALSE(r.ok());
  auto failed = r.failed_labels();
  EXPECT_EQ(failed, (std::vector<std::string>{"place_in_drawer", "turn_on_led"}));
  EXPECT_EQ(r.labels.at("place_in_drawer").attempts.size(), 3u);
  EXPECT_EQ(r.labels.at("turn_on_led").attempts.size(), 3u);
  EXPECT_EQ(r.model.find_schema("place-in-drawer"), nullptr);
  EXPECT_NE(r.model.find_schema("open-drawer"), nullptr);
}

TEST(Generate, WrongNameIsRejected) {
  auto& i = calvin_inputs();
  Scripted client;
  client.overrides["close_drawer"] = {slurp(src("data/fixtures/calvin/open_drawer/0.txt"))};
  auto r = generate_with_verification(i.in.contexts, client, i.cfg.skeleton, i.in.corpus, 0);
  EXPECT_FALSE(r.labels.at("close_drawer").accepted);
}

TEST(Candidates, ExtractedFromFreeText) {
  auto c = extract_predicate_candidates(
      "The drawer is open: (is-open ?d). Then (is-in ?b ?d) and again (is-open ?x).\n(grasp ?b ?d)\n(and (not (x)))");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].signature.name, "is-open");
  EXPECT_EQ(c[1].signature.arity, 2u);
  auto jsonl = candidates_to_jsonl(c);
  EXPECT_EQ(count(jsonl, "\n"), 2u);
  EXPECT_NE(jsonl.find("needs-review"), std::string::npos);
}
