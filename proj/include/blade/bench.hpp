#pragma once

// Task registry, the sampled-states x seeds evaluation protocol, noise
// sweeps, and the domain configuration used for generation.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blade/executor.hpp"
#include "blade/llm.hpp"

namespace blade {

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskCategory { AbstractGoal, GeometricConstraint, PartialObservability, UnseenInitial, StatePerturbation };
std::string_view to_string(TaskCategory c);
TaskCategory task_category_from(std::string_view s);

struct TaskSpec {
  std::string id;
  std::string domain;
  std::string instruction;  // metadata only
  std::string goal_text;
  Formula goal;
  std::string sampler;
  PerturbationSchedule perturbations;
  ObservationConfig observability;
  TaskCategory category = TaskCategory::AbstractGoal;
};

/// `{"tasks": [...]}` or a bare array. Throws BenchError on schema violations,
/// unknown domains, samplers or goal atoms.
std::vector<TaskSpec> load_tasks(std::string_view manifest_json);
std::vector<TaskSpec> load_tasks_file(const std::filesystem::path& path);

struct BenchConfig {
  std::size_t n_states = 20;
  std::size_t n_seeds = 3;
  std::uint64_t master_seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency
  ExecutorConfig executor;
  double skill_failure = 0.0;
  std::optional<double> flip_prob;  // overrides each task's observability
};

struct EpisodeSummary {
  std::size_t state = 0;
  std::size_t seed = 0;
  bool success = false;
  std::size_t steps = 0;
  std::size_t replans = 0;
  std::string failure;
  std::vector<std::string> executed;
};

struct TaskRow {
  std::string id;
  std::string domain;
  TaskCategory category = TaskCategory::AbstractGoal;
  std::vector<double> per_seed;  // success % per seed
  double mean = 0.0;
  double std = 0.0;
  std::vector<EpisodeSummary> episodes;  // ordered by (state, seed)
};

struct BenchmarkReport {
  std::size_t n_states = 0;
  std::size_t n_seeds = 0;
  std::uint64_t master_seed = 0;
  std::vector<TaskRow> rows;  // empty when n_states or n_seeds is 0
};

/// Agent models by domain id; domains missing from `models` use the world's
/// own model.
BenchmarkReport run_benchmark(const std::vector<TaskSpec>& tasks, const std::map<std::string, DomainModel>& models,
                              const BenchConfig& cfg);

std::string report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(std::string_view text);
std::string format_table(const BenchmarkReport& report);

struct SweepPoint {
  double flip_prob = 0.0;
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;  // %
};

/// Episode e samples its initial state and seeds from (master_seed, e), so
/// every noise level sees the same states.
std::vector<SweepPoint> sweep_noise(const TaskSpec& task, const DomainModel& model, const std::vector<double>& levels,
                                    std::size_t episodes, const BenchConfig& cfg);
std::string sweep_to_csv(const std::vector<SweepPoint>& curve);

/// Generation setup for one domain, read from JSON.
struct DomainConfig {
  std::string domain;
  std::string world;
  DomainModel skeleton;
  std::filesystem::path fixtures;
  std::size_t corpus_demos = 50;
  std::uint64_t corpus_seed = 0;
  std::size_t max_retries = 2;
  double threshold = 0.1;
  std::vector<std::string> labels;
  std::vector<std::string> objects;
  std::vector<PredicateDoc> predicates;
  std::map<std::string, std::vector<std::vector<ContactPrimitive>>> extra_sequences;
  std::size_t max_sequences = 3;
};

/// Relative paths resolve against the config's directory; bare file names
/// also match embedded resources.
DomainConfig load_domain_config(const std::filesystem::path& path);

struct GenerationInputs {
  std::vector<GenerationContext> contexts;
  LabeledCorpus corpus;
};

/// Renders a worldsim corpus, segments every trace and collects, per label,
/// the distinct primitive sequences between its annotation start and the
/// next one, and the labels seen directly before it.
GenerationInputs make_generation_inputs(const DomainConfig& cfg);

}  // namespace blade
