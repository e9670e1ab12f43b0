#pragma once

// Demonstration traces: loading, gripper-event segmentation into contact
// primitives, and re-segmentation against behavior bodies.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blade/model.hpp"

namespace blade {

struct TraceRecord {
  std::size_t t = 0;
  double gripper_width = 1.0;  // 1 = fully open
  std::optional<std::string> held;
  std::optional<std::string> contact;
  std::optional<std::string> support;

  bool operator==(const TraceRecord&) const = default;
};

struct AnnotationSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  bool operator==(const AnnotationSpan&) const = default;
};

struct DemoTrajectory {
  std::vector<TraceRecord> records;
  std::vector<AnnotationSpan> annotations;

  bool operator==(const DemoTrajectory&) const = default;
};

struct PrimitiveSegment {
  ContactPrimitive primitive;
  std::size_t start = 0;  // step (t) of the first record
  std::size_t end = 0;    // step of the last record, inclusive

  bool operator==(const PrimitiveSegment&) const = default;
};

struct BehaviorSegment {
  std::string behavior_name;
  Binding binding;  // may be partial
  std::vector<PrimitiveSegment> primitives;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t annotation = 0;  // index into DemoTrajectory::annotations
  bool valid = true;
  std::string error;
};

/// Malformed trace input; what() carries the line (or record) position.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& message, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SegmentationError : public std::runtime_error {
 public:
  SegmentationError(const std::string& message, std::size_t step)
      : std::runtime_error("step " + std::to_string(step) + ": " + message), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// JSON lines, one record per step, episodes separated by a line holding
/// `---`. `annotations` is either one {"segments": [...]} document or an
/// array of them, one per episode.
std::vector<DemoTrajectory> load_traces(std::string_view records,
                                        std::optional<std::string_view> annotations = std::nullopt);
std::string write_traces(const std::vector<DemoTrajectory>& demos);
std::string write_annotations(const std::vector<DemoTrajectory>& demos);

/// Throws TraceError (record index as position) on invariant violations.
void validate_trajectory(const DemoTrajectory& demo);

struct SegmentationConfig {
  double closed_max = 0.02;
  double open_min = 0.98;
  double hysteresis = 0.01;
};

std::vector<PrimitiveSegment> segment_trace(const DemoTrajectory& demo, const SegmentationConfig& cfg = {});

/// Matches each annotated span against its schema body (label normalized to a
/// schema name). Earlier annotations claim primitives first.
std::vector<BehaviorSegment> resegment(const std::vector<PrimitiveSegment>& segments, const DemoTrajectory& demo,
                                       const DomainModel& model);

struct RenderConfig {
  std::size_t motion_steps = 3;  // records per move-to / move / push
};

/// Appends records that segment back to `prims`. `open` and `held` carry the
/// gripper state across calls.
void render_primitives(const std::vector<ContactPrimitive>& prims, const RenderConfig& cfg,
                       std::vector<TraceRecord>& out, bool& open, std::optional<std::string>& held);

}  // namespace blade
