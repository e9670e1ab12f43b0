#pragma once

// Closed-loop execution: observe, estimate, plan, clear geometric
// preconditions, run one behavior, replan.

#include <optional>
#include <string>
#include <vector>

#include "blade/planner.hpp"
#include "blade/worldsim.hpp"

namespace blade {

/// Contradictory readings within an exclusion group become unknown.
AbstractState estimate_state(const AbstractState& observation, const DomainModel& model);

struct ExecutorConfig {
  std::size_t behavior_budget = 40;
  bool level2_enabled = true;
  std::uint64_t seed = 0;  // observation noise stream
  PlannerConfig planner;
};

enum class FailureReason { Unreachable, Budget, SkillDeadlock };
std::string_view to_string(FailureReason r);

struct ExecutedBehavior {
  GroundBehavior behavior;
  SkillOutcome outcome = SkillOutcome::Success;
};

struct EpisodeResult {
  bool success = false;
  std::vector<ExecutedBehavior> executed;
  std::size_t replans = 0;
  std::size_t perturbations_fired = 0;
  std::size_t steps_used = 0;
  std::optional<FailureReason> failure_reason;
  WorldState final_state;
  std::vector<std::string> log;  // one JSON document per cycle
};

/// `ops` are the agent's grounded behaviors; the world judges execution by
/// its own definitions.
EpisodeResult run_episode(const World& world, const WorldState& initial, const Formula& goal,
                          const DomainModel& model, const std::vector<GroundBehavior>& ops,
                          const ExecutorConfig& cfg, const ObservationConfig& obs_cfg, const SkillConfig& skill_cfg,
                          const PerturbationSchedule& schedule = {});

EpisodeResult run_episode(const World& world, const WorldState& initial, const Formula& goal,
                          const DomainModel& model, const ExecutorConfig& cfg, const ObservationConfig& obs_cfg,
                          const SkillConfig& skill_cfg, const PerturbationSchedule& schedule = {});

}  // namespace blade
