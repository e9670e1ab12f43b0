#pragma once

// Checking generated behavior definitions against demonstrations, and
// labeling demonstration steps with predicate values.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "blade/model.hpp"
#include "blade/state.hpp"

namespace blade {

struct BodyViolation {
  std::string rule;  // "combo", "adjacency" or "arg-consistency"
  std::size_t index = 0;
  std::string message;
};

/// Bodies must be one of [grasp, move], [place], [grasp, move, place],
/// [close, push, open]; a grasp may never directly follow a grasp.
std::vector<BodyViolation> check_body_wellformed(const BehaviorSchema& schema);

struct PrimitiveViolation {
  std::string behavior;
  std::string rule;
  std::string location;
};

struct VerificationReport {
  std::map<std::string, std::size_t> error_count;
  std::map<std::string, std::size_t> occurrence_count;
  std::map<std::string, double> error_rate;
  std::set<std::string> flagged;
  std::vector<PrimitiveViolation> primitive_violations;
  double threshold = 0.1;
};

/// Replays each sequence over a map of predicate values: a precondition
/// literal counts as an error when the map holds the opposite value; effects
/// overwrite the map. Behaviors whose error rate exceeds `threshold` are flagged.
VerificationReport verify_descriptions(const std::vector<std::vector<GroundBehavior>>& sequences,
                                       const DomainModel& model, double threshold = 0.1);

std::string report_to_json(const VerificationReport& report);

struct TimedBehavior {
  GroundBehavior behavior;
  std::size_t start = 0;
  std::size_t end = 0;
};

enum class LabelSource { Pre, Eff, Propagated };
std::string_view to_string(LabelSource s);

struct DatasetEntry {
  std::size_t demo = 0;
  std::size_t step = 0;
  Atom atom;
  bool label = false;
  LabelSource source = LabelSource::Pre;
};

struct AnnotationConflict {
  std::size_t demo = 0;
  std::size_t step = 0;
  Atom atom;
  std::string first;   // behavior that produced the first label
  std::string second;  // behavior that contradicted it
};

/// Conflicting (demo, step, atom) labels are reported and left out of entries.
struct PredicateDataset {
  std::vector<DatasetEntry> entries;
  std::vector<AnnotationConflict> conflicts;
};

std::string dataset_to_jsonl(const PredicateDataset& dataset);

/// Before a behavior: its preconditions and negated effects, at its start
/// step. After it: its effects from the end step until a later behavior's
/// effect mentions the atom or sets an exclusive partner of it (through that
/// behavior's start), else to the last observation. Static predicates are not
/// labeled.
PredicateDataset annotate(const std::vector<std::vector<TimedBehavior>>& demos,
                          const std::vector<std::size_t>& observation_counts, const DomainModel& model);
PredicateDataset annotate(const std::vector<TimedBehavior>& demo, std::size_t observation_count,
                          const DomainModel& model);

/// Same labels, but effects only at each segment's end step.
PredicateDataset annotate_endpoints(const std::vector<std::vector<TimedBehavior>>& demos,
                                    const std::vector<std::size_t>& observation_counts, const DomainModel& model);
PredicateDataset annotate_endpoints(const std::vector<TimedBehavior>& demo, std::size_t observation_count,
                                    const DomainModel& model);

struct Scores {
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t predictions = 0;
  std::size_t correct = 0;
  std::size_t positives = 0;  // known truth atoms
};

struct AnnotationMetrics {
  Scores overall;
  std::map<std::string, Scores> per_predicate;
};

/// truth[demo][step]. Precision is correct / predictions (1.0 when there are
/// none); recall is correct / known truth atoms over all truth steps.
AnnotationMetrics evaluate_annotation(const PredicateDataset& dataset,
                                      const std::vector<std::vector<AbstractState>>& truth);

}  // namespace blade
