#include "blade/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "blade/dialect.hpp"
#include "blade/resources.hpp"
#include "json.hpp"

namespace blade {

using nlohmann::json;

std::string_view to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::AbstractGoal:
      return "abstract-goal";
    case TaskCategory::GeometricConstraint:
      return "geometric-constraint";
    case TaskCategory::PartialObservability:
      return "partial-observability";
    case TaskCategory::UnseenInitial:
      return "unseen-initial";
    default:
      return "state-perturbation";
  }
}

TaskCategory task_category_from(std::string_view s) {
  for (auto c : {TaskCategory::AbstractGoal, TaskCategory::GeometricConstraint, TaskCategory::PartialObservability,
                 TaskCategory::UnseenInitial, TaskCategory::StatePerturbation})
    if (to_string(c) == s) return c;
  throw BenchError("unknown task category " + std::string(s));
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw BenchError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0;
  for (auto p : parts) h = splitmix(h ^ p);
  return h;
}

std::uint64_t hash_text(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

const World& world_for(const std::string& domain) {
  try {
    return builtin_world(domain);
  } catch (const std::invalid_argument&) {
    throw BenchError("unknown domain " + domain);
  }
}

TaskSpec task_from_json(const json& j, std::size_t index) {
  auto where = "task " + std::to_string(index);
  if (!j.is_object()) throw BenchError(where + ": expected an object");
  for (const char* k : {"id", "domain", "goal", "sampler"})
    if (!j.contains(k) || !j[k].is_string()) throw BenchError(where + ": missing string field '" + k + "'");
  TaskSpec t;
  t.id = j["id"];
  t.domain = j["domain"];
  t.goal_text = j["goal"];
  t.sampler = j["sampler"];
  t.instruction = j.value("instruction", "");
  if (j.contains("category")) t.category = task_category_from(j["category"].get<std::string>());
  const World& w = world_for(t.domain);
  auto samplers = sampler_ids(t.domain);
  if (std::find(samplers.begin(), samplers.end(), t.sampler) == samplers.end())
    throw BenchError(where + ": unknown sampler " + t.sampler);
  try {
    t.goal = parse_formula(t.goal_text, w.model);
    for (const auto& l : t.goal.literals)
      if (!w.in_universe(l.atom)) throw BenchError("goal atom " + to_string(l.atom) + " is outside the domain");
    if (!t.goal.universals.empty()) throw BenchError("quantified goals are not supported");
    if (j.contains("perturbations")) {
      for (const auto& p : j["perturbations"]) {
        Perturbation pt;
        if (p.contains("after_index")) pt.after_index = p["after_index"].get<std::size_t>();
        if (p.contains("after_behavior")) pt.after_behavior = p["after_behavior"].get<std::string>();
        if (!pt.after_index && !pt.after_behavior) throw BenchError("perturbation without a trigger");
        pt.delta = parse_literals(p.at("delta").get<std::string>(), w.model);
        t.perturbations.push_back(std::move(pt));
      }
    }
    if (j.contains("observability")) {
      const auto& o = j["observability"];
      t.observability.flip_prob = o.value("flip_prob", 0.0);
      t.observability.visibility_gating = o.value("visibility_gating", true);
    }
  } catch (const BenchError& e) {
    throw BenchError(where + " (" + t.id + "): " + e.what());
  } catch (const std::exception& e) {
    throw BenchError(where + " (" + t.id + "): " + e.what());
  }
  return t;
}

}  // namespace

std::vector<TaskSpec> load_tasks(std::string_view manifest_json) {
  json doc;
  try {
    doc = json::parse(manifest_json);
  } catch (const json::parse_error& e) {
    throw BenchError(std::string("manifest is not JSON: ") + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("tasks")) throw BenchError("manifest has no 'tasks' array");
    list = &doc["tasks"];
  }
  if (!list->is_array()) throw BenchError("'tasks' must be an array");
  std::vector<TaskSpec> out;
  for (std::size_t i = 0; i < list->size(); ++i) out.push_back(task_from_json((*list)[i], i));
  return out;
}

std::vector<TaskSpec> load_tasks_file(const std::filesystem::path& path) { return load_tasks(read_file(path)); }

namespace {

struct Job {
  std::size_t task, state, seed;
};

EpisodeSummary run_one(const TaskSpec& t, const DomainModel& model, const std::vector<GroundBehavior>& ops,
                       std::uint64_t state_seed, std::uint64_t episode_seed, const BenchConfig& cfg) {
  const World& w = world_for(t.domain);
  WorldState init = init_domain(t.domain, t.sampler, state_seed);
  ExecutorConfig ec = cfg.executor;
  ec.seed = episode_seed;
  ObservationConfig oc = t.observability;
  if (cfg.flip_prob) oc.flip_prob = *cfg.flip_prob;
  SkillConfig sc{cfg.skill_failure, splitmix(episode_seed ^ 0x5eedull)};
  auto r = run_episode(w, init, t.goal, model, ops, ec, oc, sc, t.perturbations);
  EpisodeSummary s;
  s.success = r.success;
  s.steps = r.steps_used;
  s.replans = r.replans;
  if (r.failure_reason) s.failure = std::string(to_string(*r.failure_reason));
  for (const auto& e : r.executed) s.executed.push_back(to_string(e.behavior));
  return s;
}

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < threads; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i; (i = next++) < n;) body(i);
      } catch (...) {
        errors[k] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Agent {
  DomainModel model;
  std::vector<GroundBehavior> ops;
};

std::map<std::string, Agent> agents_for(const std::vector<TaskSpec>& tasks,
                                        const std::map<std::string, DomainModel>& models) {
  std::map<std::string, Agent> out;
  for (const auto& t : tasks) {
    if (out.contains(t.domain)) continue;
    auto it = models.find(t.domain);
    Agent a{it != models.end() ? it->second : world_for(t.domain).model, {}};
    a.ops = instantiate_all(a.model, objects_of(a.model));
    out.emplace(t.domain, std::move(a));
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const std::vector<TaskSpec>& tasks, const std::map<std::string, DomainModel>& models,
                              const BenchConfig& cfg) {
  BenchmarkReport rep{cfg.n_states, cfg.n_seeds, cfg.master_seed, {}};
  if (cfg.n_states == 0 || cfg.n_seeds == 0) return rep;
  auto agents = agents_for(tasks, models);

  std::vector<Job> jobs;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (std::size_t i = 0; i < cfg.n_states; ++i)
      for (std::size_t s = 0; s < cfg.n_seeds; ++s) jobs.push_back({t, i, s});
  std::vector<EpisodeSummary> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& j = jobs[k];
    const auto& t = tasks[j.task];
    std::uint64_t task_key = hash_text(t.domain + "/" + t.id);
    const Agent& a = agents.at(t.domain);
    results[k] = run_one(t, a.model, a.ops, mix({cfg.master_seed, task_key, j.state}),
                         mix({cfg.master_seed, task_key, j.state, j.seed + 1}), cfg);
    results[k].state = j.state;
    results[k].seed = j.seed;
  });

  std::size_t k = 0;
  for (const auto& t : tasks) {
    TaskRow row{t.id, t.domain, t.category, std::vector<double>(cfg.n_seeds, 0.0), 0.0, 0.0, {}};
    for (std::size_t i = 0; i < cfg.n_states; ++i)
      for (std::size_t s = 0; s < cfg.n_seeds; ++s, ++k) {
        if (results[k].success) row.per_seed[s] += 100.0 / static_cast<double>(cfg.n_states);
        row.episodes.push_back(results[k]);
      }
    for (double v : row.per_seed) row.mean += v / static_cast<double>(cfg.n_seeds);
    for (double v : row.per_seed) row.std += (v - row.mean) * (v - row.mean) / static_cast<double>(cfg.n_seeds);
    row.std = std::sqrt(row.std);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string report_to_json(const BenchmarkReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json eps = json::array();
    for (const auto& e : r.episodes)
      eps.push_back({{"state", e.state},
                     {"seed", e.seed},
                     {"success", e.success},
                     {"steps", e.steps},
                     {"replans", e.replans},
                     {"failure", e.failure},
                     {"executed", e.executed}});
    rows.push_back({{"id", r.id},
                    {"domain", r.domain},
                    {"category", to_string(r.category)},
                    {"per_seed", r.per_seed},
                    {"mean", r.mean},
                    {"std", r.std},
                    {"episodes", eps}});
  }
  json j{{"protocol", {{"n_states", report.n_states}, {"n_seeds", report.n_seeds}, {"master_seed", report.master_seed}}},
         {"rows", rows}};
  return j.dump(2);
}

BenchmarkReport report_from_json(std::string_view text) {
  BenchmarkReport rep;
  try {
    auto j = json::parse(text);
    const auto& p = j.at("protocol");
    rep.n_states = p.at("n_states");
    rep.n_seeds = p.at("n_seeds");
    rep.master_seed = p.at("master_seed");
    for (const auto& r : j.at("rows")) {
      TaskRow row;
      row.id = r.at("id");
      row.domain = r.at("domain");
      row.category = task_category_from(r.at("category").get<std::string>());
      row.per_seed = r.at("per_seed").get<std::vector<double>>();
      row.mean = r.at("mean");
      row.std = r.at("std");
      for (const auto& e : r.value("episodes", json::array())) {
        EpisodeSummary s;
        s.state = e.at("state");
        s.seed = e.at("seed");
        s.success = e.at("success");
        s.steps = e.value("steps", 0);
        s.replans = e.value("replans", 0);
        s.failure = e.value("failure", "");
        s.executed = e.value("executed", std::vector<std::string>{});
        row.episodes.push_back(std::move(s));
      }
      rep.rows.push_back(std::move(row));
    }
  } catch (const BenchError&) {
    throw;
  } catch (const std::exception& e) {
    throw BenchError(std::string("malformed report: ") + e.what());
  }
  return rep;
}

std::string format_table(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "states=" << report.n_states << " seeds=" << report.n_seeds << " master_seed=" << report.master_seed << "\n";
  os << std::left << std::setw(12) << "domain" << std::setw(14) << "task" << std::setw(24) << "category"
     << "success %\n";
  os << std::fixed << std::setprecision(1);
  for (const auto& r : report.rows)
    os << std::setw(12) << r.domain << std::setw(14) << r.id << std::setw(24) << to_string(r.category) << r.mean
       << " +- " << r.std << "\n";
  return os.str();
}

std::vector<SweepPoint> sweep_noise(const TaskSpec& task, const DomainModel& model, const std::vector<double>& levels,
                                    std::size_t episodes, const BenchConfig& cfg) {
  auto agents = agents_for({task}, {{task.domain, model}});
  const Agent& a = agents.at(task.domain);
  std::uint64_t task_key = hash_text(task.domain + "/" + task.id);
  std::vector<SweepPoint> out;
  for (double p : levels) {
    BenchConfig c = cfg;
    c.flip_prob = p;
    std::vector<char> ok(episodes, 0);
    parallel_for(episodes, cfg.threads, [&](std::size_t e) {
      ok[e] = run_one(task, a.model, a.ops, mix({cfg.master_seed, task_key, e}),
                      mix({cfg.master_seed, task_key, e, 1}), c)
                  .success;
    });
    SweepPoint pt{p, episodes, static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1)), 0.0};
    pt.success_rate = episodes ? 100.0 * static_cast<double>(pt.successes) / static_cast<double>(episodes) : 0.0;
    out.push_back(pt);
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& curve) {
  std::ostringstream os;
  os << "flip_prob,episodes,successes,success_rate\n";
  for (const auto& p : curve) os << p.flip_prob << "," << p.episodes << "," << p.successes << "," << p.success_rate << "\n";
  return os.str();
}

namespace {

std::string resolve_text(const std::filesystem::path& base, const std::string& ref) {
  auto p = base / ref;
  if (std::filesystem::exists(p)) return read_file(p);
  if (auto e = embedded_file(std::filesystem::path(ref).filename().string())) return std::string(*e);
  throw BenchError("cannot find " + ref);
}

ContactPrimitive primitive_from_json(const json& j) {
  auto kind = primitive_kind_from(j.at("name").get<std::string>());
  if (!kind) throw BenchError("unknown primitive " + j.at("name").get<std::string>());
  std::vector<std::optional<std::string>> args;
  for (const auto& a : j.value("arguments", json::array())) {
    std::string s = a.get<std::string>();
    if (s.empty()) args.push_back(std::nullopt);
    else args.push_back(normalize_identifier(s));
  }
  args.resize(primitive_arity(*kind));
  return ContactPrimitive::make(*kind, args);
}

std::string label_of(std::string_view behavior) {
  std::string s(behavior);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

}  // namespace

DomainConfig load_domain_config(const std::filesystem::path& path) {
  DomainConfig c;
  auto base = path.parent_path();
  try {
    auto j = json::parse(read_file(path));
    c.domain = j.at("domain");
    c.world = j.value("world", c.domain);
    c.skeleton = parse_domain(resolve_text(base, j.at("skeleton")));
    // A full domain file can serve as skeleton: its behaviors are what gets generated.
    c.skeleton.schemas.clear();
    c.fixtures = base / j.value("fixtures", std::string("fixtures"));
    if (j.contains("corpus")) {
      c.corpus_demos = j["corpus"].value("demos", c.corpus_demos);
      c.corpus_seed = j["corpus"].value("seed", c.corpus_seed);
    }
    c.max_retries = j.value("max_retries", c.max_retries);
    c.threshold = j.value("threshold", c.threshold);
    c.max_sequences = j.value("max_sequences", c.max_sequences);
    c.labels = j.value("labels", std::vector<std::string>{});
    c.objects = j.value("objects", std::vector<std::string>{});
    json preds = j.value("predicates", json::array());
    for (const auto& p : preds)
      c.predicates.push_back({p.at("signature"), p.value("doc", "")});
    json extra = j.value("sequences", json::object());
    for (const auto& [label, seqs] : extra.items())
      for (const auto& seq : seqs) {
        std::vector<ContactPrimitive> prims;
        for (const auto& p : seq) prims.push_back(primitive_from_json(p));
        c.extra_sequences[label].push_back(std::move(prims));
      }
  } catch (const BenchError&) {
    throw;
  } catch (const std::exception& e) {
    throw BenchError(path.string() + ": " + e.what());
  }
  return c;
}

GenerationInputs make_generation_inputs(const DomainConfig& cfg) {
  const World& w = world_for(cfg.world);
  auto demos = generate_corpus(w, cfg.corpus_demos, cfg.corpus_seed);
  GenerationInputs out;
  std::map<std::string, std::vector<std::vector<ContactPrimitive>>> seqs;
  std::map<std::string, std::vector<std::string>> prev;
  std::vector<std::string> seen_order;
  for (const auto& d : demos) {
    const auto& traj = d.rendered.trajectory;
    auto prims = segment_trace(traj);
    std::vector<CorpusStep> steps;
    for (std::size_t k = 0; k < d.behaviors.size(); ++k) {
      const auto& b = d.behaviors[k];
      std::string label = label_of(b.name);
      steps.push_back({label, b.args});
      if (!seqs.contains(label)) seen_order.push_back(label);
      std::size_t from = traj.annotations[k].start;
      std::size_t to = k + 1 < traj.annotations.size() ? traj.annotations[k + 1].start : SIZE_MAX;
      std::vector<ContactPrimitive> seq;
      for (const auto& p : prims)
        if (p.start >= from && p.start < to) seq.push_back(p.primitive);
      auto& list = seqs[label];
      if (list.size() < cfg.max_sequences && std::find(list.begin(), list.end(), seq) == list.end())
        list.push_back(std::move(seq));
      if (k > 0) {
        auto& pl = prev[label];
        std::string p = label_of(d.behaviors[k - 1].name);
        if (std::find(pl.begin(), pl.end(), p) == pl.end()) pl.push_back(p);
      }
    }
    out.corpus.push_back(std::move(steps));
  }

  std::vector<std::string> labels = cfg.labels;
  if (labels.empty()) {
    for (const auto& s : w.model.schemas)
      if (seqs.contains(label_of(s.name))) labels.push_back(label_of(s.name));
  }
  for (const auto& label : labels) {
    GenerationContext ctx;
    ctx.behavior_label = label;
    ctx.objects = cfg.objects;
    ctx.predicate_list = cfg.predicates;
    if (auto it = seqs.find(label); it != seqs.end()) ctx.primitive_sequences = it->second;
    else if (auto e = cfg.extra_sequences.find(label); e != cfg.extra_sequences.end())
      ctx.primitive_sequences = e->second;
    else
      throw BenchError("no demonstrations for " + label);
    if (auto it = prev.find(label); it != prev.end()) ctx.previous_tasks = it->second;
    out.contexts.push_back(std::move(ctx));
  }
  return out;
}

}  // namespace blade
