#pragma once

// Forward search over abstract states guided by the FF heuristic, plus the
// "in the now" resolution of geometric preconditions.

#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "blade/model.hpp"
#include "blade/state.hpp"

namespace blade {

using Goal = Formula;
using Plan = std::vector<GroundBehavior>;

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kleene conjunction over the literals; throws std::invalid_argument on
/// variables or universals.
Truth evaluate(const AbstractState& state, const Formula& formula);

/// Closed world: every unknown atom becomes false.
AbstractState project(const AbstractState& state);

/// Requires the level-1 precondition to hold under projection.
AbstractState apply(const AbstractState& state, const GroundBehavior& behavior);

constexpr std::size_t kInfinite = std::numeric_limits<std::size_t>::max();

/// Relaxed-plan length, kInfinite when the goal is relaxed-unreachable.
std::size_t h_ff(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops);

struct PlannerConfig {
  std::size_t node_budget = 100000;
  std::size_t fallback_budget = 2000000;
};

enum class PlanStatus { Found, Unreachable, BudgetExhausted };
std::string_view to_string(PlanStatus s);

struct PlanResult {
  PlanStatus status = PlanStatus::Unreachable;
  Plan steps;
  std::size_t expanded = 0;
  bool used_fallback = false;

  bool found() const { return status == PlanStatus::Found; }
};

/// Greedy best-first on h_ff with duplicate detection, ties broken by
/// insertion order; breadth-first once the node budget runs out.
PlanResult plan(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops,
                const PlannerConfig& cfg = {});

/// Plain breadth-first search; shortest plans. Used as a reference.
PlanResult plan_bfs(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops,
                    std::size_t budget = 2000000);

struct Simulation {
  AbstractState final_state;
  std::optional<std::size_t> failed_index;
  bool ok() const { return !failed_index; }
};

Simulation simulate_plan(const AbstractState& state, const Plan& plan);

struct Level2Result {
  PlanStatus status = PlanStatus::Found;
  Plan prefix;
};

/// Empty prefix when the geometric precondition already holds; otherwise a
/// plan achieving it. Steps of that plan must not need clearing themselves.
Level2Result resolve_level2(const AbstractState& state, const GroundBehavior& behavior,
                            const std::vector<GroundBehavior>& ops, const PlannerConfig& cfg = {});

/// (reveal rule index, object) pairs ruled out by observation.
using RefutedReveals = std::set<std::pair<std::size_t, std::string>>;

/// Objects whose fluent atoms are all unknown in `belief`.
std::vector<std::string> hidden_objects(const AbstractState& belief, const DomainModel& model,
                                        const std::vector<GroundBehavior>& ops);

/// Adds refutations for rules whose condition is believed true while the
/// object is still hidden.
void refute_reveals(const AbstractState& belief, const DomainModel& model, const std::vector<std::string>& hidden,
                    RefutedReveals& refuted);

/// Copies of `ops` where, for each hidden object, the first unrefuted reveal
/// rule whose placement some operator needs adds that placement to every
/// operator achieving the rule's condition.
std::vector<GroundBehavior> with_optimistic_reveals(const std::vector<GroundBehavior>& ops, const DomainModel& model,
                                                    const std::vector<std::string>& hidden,
                                                    const RefutedReveals& refuted);

}  // namespace blade
