#include <gtest/gtest.h>

#include "blade/trace.hpp"
#include "blade/worldsim.hpp"

using namespace blade;

namespace {

ContactPrimitive P(PrimitiveKind k, std::vector<std::optional<std::string>> a = {}) { return ContactPrimitive::make(k, a); }

std::vector<ContactPrimitive> kinds(const std::vector<PrimitiveSegment>& segs) {
  std::vector<ContactPrimitive> out;
  for (const auto& s : segs) out.push_back(s.primitive);
  return out;
}

}  // namespace

TEST(Segment, RenderedPrimitivesSegmentBack) {
  std::vector<ContactPrimitive> prims = {P(PrimitiveKind::MoveTo, {"red-block"}),
                                         P(PrimitiveKind::Grasp, {"red-block", "table"}),
                                         P(PrimitiveKind::Move, {"red-block"}),
                                         P(PrimitiveKind::Place, {"red-block", "drawer"}),
                                         P(PrimitiveKind::MoveTo, {"drawer"}),
                                         P(PrimitiveKind::Close),
                                         P(PrimitiveKind::Push, {"drawer"}),
                                         P(PrimitiveKind::Open)};
  DemoTrajectory d;
  bool open = true;
  std::optional<std::string> held;
  render_primitives(prims, {}, d.records, open, held);
  validate_trajectory(d);
  EXPECT_EQ(kinds(segment_trace(d)), prims);
}

TEST(Segment, ApproachTakesTargetOfNextContact) {
  DemoTrajectory d;
  bool open = true;
  std::optional<std::string> held;
  render_primitives({P(PrimitiveKind::MoveTo, {std::nullopt}), P(PrimitiveKind::Close), P(PrimitiveKind::Push, {"led"}),
                     P(PrimitiveKind::Open)},
                    {}, d.records, open, held);
  auto segs = segment_trace(d);
  ASSERT_EQ(segs.size(), 4u);
  EXPECT_EQ(segs[0].primitive, P(PrimitiveKind::MoveTo, {"led"}));
}

TEST(Segment, InconsistentGripperIsRejected) {
  std::vector<TraceRecord> recs;
  bool open = true;
  std::optional<std::string> held;
  EXPECT_THROW(render_primitives({P(PrimitiveKind::Place, {"a", "b"})}, {}, recs, open, held), ModelError);
}

TEST(Segment, HysteresisIgnoresJitter) {
  DemoTrajectory d;
  for (std::size_t t = 0; t < 6; ++t) d.records.push_back({t, t % 2 ? 0.985 : 0.995, std::nullopt, std::nullopt, std::nullopt});
  auto segs = segment_trace(d);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].primitive.kind, PrimitiveKind::MoveTo);
}

TEST(TraceIo, WriteLoadRoundTrip) {
  const World& w = builtin_world("calvin");
  auto corpus = generate_corpus(w, 3, 5);
  std::vector<DemoTrajectory> demos;
  for (const auto& c : corpus) demos.push_back(c.rendered.trajectory);
  auto loaded = load_traces(write_traces(demos), write_annotations(demos));
  EXPECT_EQ(loaded, demos);
}

TEST(TraceIo, MalformedLineReportsLine) {
  try {
    load_traces(
        "{\"t\":0,\"gripper_width\":1.0,\"held\":null,\"contact\":null,\"support\":null}\nnot json\n");
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(TraceIo, NonIncreasingTimeRejected) {
  DemoTrajectory d;
  d.records = {{1, 1.0, {}, {}, {}}, {1, 1.0, {}, {}, {}}};
  EXPECT_THROW(validate_trajectory(d), TraceError);
}

TEST(Resegment, RecoversDemonstratedBehaviors) {
  const World& w = builtin_world("calvin");
  for (const auto& demo : generate_corpus(w, 20, 9)) {
    const auto& traj = demo.rendered.trajectory;
    auto segs = resegment(segment_trace(traj), traj, w.model);
    ASSERT_EQ(segs.size(), demo.behaviors.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
      ASSERT_TRUE(segs[k].valid) << segs[k].error;
      EXPECT_EQ(segs[k].behavior_name, demo.behaviors[k].name);
      const auto* s = w.model.find_schema(segs[k].behavior_name);
      for (std::size_t i = 0; i < s->params.size(); ++i)
        if (segs[k].binding.contains(s->params[i].name))
          EXPECT_EQ(segs[k].binding.at(s->params[i].name), demo.behaviors[k].args[i]);
    }
  }
}

TEST(Resegment, UnknownLabelIsInvalid) {
  const World& w = builtin_world("calvin");
  auto demo = generate_corpus(w, 1, 2).front();
  auto traj = demo.rendered.trajectory;
  traj.annotations[0].label = "juggle_blocks";
  auto segs = resegment(segment_trace(traj), traj, w.model);
  EXPECT_FALSE(segs[0].valid);
}
