#pragma once

// Ground-truth symbolic environment: scripted skills, perturbations,
// observation with visibility gating and noise, and synthetic demonstrations.

#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "blade/model.hpp"
#include "blade/state.hpp"
#include "blade/trace.hpp"

namespace blade {

/// A domain prepared for simulation: grounded once, shared read-only.
struct World {
  std::string id;
  DomainModel model;
  ObjectSet objects;
  std::vector<GroundBehavior> ops;
  std::vector<Atom> universe;  // fluent atoms any operator reads or writes

  explicit World(DomainModel m, std::string id = {});
  const GroundBehavior* find_op(const std::string& name, const std::vector<std::string>& args) const;
  bool in_universe(const Atom& atom) const;
};

/// "calvin", "boil-water" or "make-tea"; throws std::invalid_argument otherwise.
const World& builtin_world(const std::string& domain_id);
std::vector<std::string> builtin_domains();

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldState {
  std::map<Atom, bool> atoms;  // complete over World::universe
  // For objects inside a container: index of the reveal rule that exposes them.
  std::map<std::string, std::size_t> compartment;
  std::size_t step_count = 0;

  bool holds(const Atom& atom) const;
  bool operator==(const WorldState&) const = default;
};

/// Objects currently inside a closed opaque container.
std::set<std::string> hidden_in(const World& world, const WorldState& state);
std::map<std::string, std::set<std::string>> container_contents(const World& world, const WorldState& state);
std::set<std::pair<std::string, std::string>> blocking(const WorldState& state);
/// Empty when the state respects the domain's exclusion groups.
std::vector<std::string> consistency_violations(const World& world, const WorldState& state);

/// A world state from an explicit list of true atoms (all others false).
WorldState make_state(const World& world, const std::vector<Atom>& true_atoms);

std::vector<std::string> sampler_ids(const std::string& domain_id);
/// Draws an initial state for a task; throws std::invalid_argument for an
/// unknown domain or sampler.
WorldState init_domain(const std::string& domain_id, const std::string& sampler_id, std::uint64_t seed);

struct SkillConfig {
  double failure_prob = 0.0;
  std::uint64_t rng_seed = 0;
};

enum class SkillOutcome { Success, Failed, PreconditionViolated };
std::string_view to_string(SkillOutcome o);

struct SkillResult {
  WorldState state;
  SkillOutcome outcome = SkillOutcome::Success;
  std::string reason;
};

/// The world's own definition of the behavior (by name and arguments) is
/// what gets checked and applied.
SkillResult execute_skill(const World& world, const WorldState& state, const GroundBehavior& behavior,
                          const SkillConfig& cfg, std::mt19937_64& rng);

struct Perturbation {
  std::optional<std::size_t> after_index;     // after the n-th executed behavior (0-based)
  std::optional<std::string> after_behavior;  // after the first success of this behavior
  std::vector<Literal> delta;
};
using PerturbationSchedule = std::vector<Perturbation>;

/// Throws WorldError when the delta names atoms outside the domain or leaves
/// the state inconsistent.
WorldState apply_perturbation(const World& world, const WorldState& state, const std::vector<Literal>& delta);

struct ObservationConfig {
  double flip_prob = 0.0;
  bool visibility_gating = true;
};

AbstractState observe(const World& world, const WorldState& state, const ObservationConfig& cfg,
                      std::mt19937_64& rng);

/// Throws std::invalid_argument for an atom outside the domain.
bool goal_satisfied(const World& world, const WorldState& state, const Formula& goal);

/// Complete closed-world view of the ground truth.
AbstractState truth_state(const WorldState& state);

struct RenderedDemo {
  DemoTrajectory trajectory;
  std::vector<WorldState> states;  // ground truth at every record
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // body records per behavior
};

/// Executes the sequence deterministically and renders each body, preceded
/// by an approach move-to when the gripper is open. Throws WorldError if a
/// behavior cannot run.
RenderedDemo render_demo(const World& world, const WorldState& state, const std::vector<GroundBehavior>& sequence,
                         const RenderConfig& cfg = {});
DemoTrajectory emit_trace(const World& world, const WorldState& state, const std::vector<GroundBehavior>& sequence,
                          const RenderConfig& cfg = {});

struct Demo {
  WorldState initial;
  std::vector<GroundBehavior> behaviors;
  RenderedDemo rendered;
};

struct CorpusConfig {
  std::size_t min_length = 2;
  std::size_t max_length = 6;
  RenderConfig render;
};

/// Random walks over behaviors that change the state, keeping the gripper
/// consistent. Effects on predicates some behavior reads must all change;
/// geometric bookkeeping may be a no-op (a lifted object is placed before anything else).
std::vector<Demo> generate_corpus(const World& world, std::size_t count, std::uint64_t seed,
                                  const CorpusConfig& cfg = {});

}  // namespace blade
