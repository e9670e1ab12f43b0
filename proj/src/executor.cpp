#include "blade/executor.hpp"

#include <algorithm>

#include "json.hpp"

namespace blade {

AbstractState estimate_state(const AbstractState& observation, const DomainModel& model) {
  AbstractState out = observation;
  for (const auto& g : model.exclusions) {
    std::map<std::string, std::vector<Atom>> read_true, seen;
    for (const auto& [a, v] : observation.known()) {
      if (a.args.empty() || std::find(g.predicates.begin(), g.predicates.end(), a.predicate) == g.predicates.end())
        continue;
      seen[a.args[0]].push_back(a);
      if (v) read_true[a.args[0]].push_back(a);
    }
    for (const auto& [subject, atoms] : seen) {
      std::size_t n = read_true.contains(subject) ? read_true[subject].size() : 0;
      bool contradiction = n > 1;
      // For exactly-one groups an all-false reading is just as impossible,
      // but only if every member of the group was read.
      if (g.exactly_one && n == 0 && atoms.size() >= g.predicates.size()) contradiction = true;
      if (!contradiction) continue;
      for (const auto& a : (n > 1 ? read_true[subject] : atoms)) out.set(a, Truth::Unknown);
    }
  }
  return out;
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::Unreachable:
      return "unreachable";
    case FailureReason::Budget:
      return "budget";
    default:
      return "skill-deadlock";
  }
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

}  // namespace

EpisodeResult run_episode(const World& world, const WorldState& initial, const Formula& goal,
                          const DomainModel& model, const std::vector<GroundBehavior>& ops,
                          const ExecutorConfig& cfg, const ObservationConfig& obs_cfg, const SkillConfig& skill_cfg,
                          const PerturbationSchedule& schedule) {
  EpisodeResult res;
  WorldState s = initial;
  std::mt19937_64 obs_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull), skill_rng(skill_cfg.rng_seed);
  std::vector<bool> fired(schedule.size(), false);
  RefutedReveals refuted;
  const std::size_t max_cycles = 3 * cfg.behavior_budget + 3;

  for (std::size_t cycle = 0;; ++cycle) {
    nlohmann::json entry{{"cycle", cycle}};
    AbstractState belief = estimate_state(observe(world, s, obs_cfg, obs_rng), model);
    entry["belief"] = fnv1a(to_string(belief));
    if (goal_satisfied(world, s, goal)) {
      res.success = true;
      entry["event"] = "goal";
      res.log.push_back(entry.dump());
      break;
    }
    if (res.executed.size() >= cfg.behavior_budget || cycle >= max_cycles) {
      std::size_t tail = std::min<std::size_t>(3, res.executed.size());
      bool stuck = tail == 3 && std::all_of(res.executed.end() - 3, res.executed.end(), [](const auto& e) {
                     return e.outcome != SkillOutcome::Success;
                   });
      res.failure_reason = stuck ? FailureReason::SkillDeadlock : FailureReason::Budget;
      entry["event"] = to_string(*res.failure_reason);
      res.log.push_back(entry.dump());
      break;
    }
    auto hidden = hidden_objects(belief, model, ops);
    refute_reveals(belief, model, hidden, refuted);
    auto agent_ops = with_optimistic_reveals(ops, model, hidden, refuted);

    ++res.replans;
    auto p = plan(belief, goal, agent_ops, cfg.planner);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& b : p.steps) steps.push_back(to_string(b));
    entry["plan"] = steps;
    if (!p.found()) {
      res.failure_reason = p.status == PlanStatus::BudgetExhausted ? FailureReason::Budget : FailureReason::Unreachable;
      entry["event"] = to_string(p.status);
      res.log.push_back(entry.dump());
      break;
    }
    if (p.steps.empty()) {
      // Believed done but not done: look again.
      entry["event"] = "belief-goal";
      res.log.push_back(entry.dump());
      continue;
    }
    GroundBehavior head = p.steps.front();
    if (cfg.level2_enabled) {
      auto l2 = resolve_level2(belief, head, agent_ops, cfg.planner);
      if (l2.status != PlanStatus::Found) {
        res.failure_reason = FailureReason::Unreachable;
        entry["event"] = "level2-" + std::string(to_string(l2.status));
        res.log.push_back(entry.dump());
        break;
      }
      if (!l2.prefix.empty()) {
        nlohmann::json pre = nlohmann::json::array();
        for (const auto& b : l2.prefix) pre.push_back(to_string(b));
        entry["prefix"] = pre;
        head = l2.prefix.front();
      }
    }
    auto r = execute_skill(world, s, head, skill_cfg, skill_rng);
    s = r.state;
    res.executed.push_back({head, r.outcome});
    entry["executed"] = to_string(head);
    entry["outcome"] = to_string(r.outcome);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (fired[i]) continue;
      const auto& pt = schedule[i];
      bool due = (pt.after_index && *pt.after_index == res.executed.size() - 1) ||
                 (pt.after_behavior && r.outcome == SkillOutcome::Success && head.name == *pt.after_behavior);
      if (!due) continue;
      fired[i] = true;
      s = apply_perturbation(world, s, pt.delta);
      ++res.perturbations_fired;
      entry["perturbation"] = i;
    }
    res.log.push_back(entry.dump());
  }
  res.steps_used = res.executed.size();
  res.final_state = s;
  return res;
}

EpisodeResult run_episode(const World& world, const WorldState& initial, const Formula& goal,
                          const DomainModel& model, const ExecutorConfig& cfg, const ObservationConfig& obs_cfg,
                          const SkillConfig& skill_cfg, const PerturbationSchedule& schedule) {
  auto ops = instantiate_all(model, objects_of(model));
  return run_episode(world, initial, goal, model, ops, cfg, obs_cfg, skill_cfg, schedule);
}

}  // namespace blade
