// blade: command-line front end for the behavior-model toolchain.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "blade/bench.hpp"
#include "blade/dialect.hpp"
#include "blade/executor.hpp"
#include "blade/llm.hpp"
#include "blade/operator_lab.hpp"
#include "blade/planner.hpp"
#include "blade/sexpr.hpp"
#include "blade/trace.hpp"

namespace fs = std::filesystem;
using namespace blade;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Failure("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure("cannot write " + p.string());
  out << text;
}

DomainModel load_domain(const fs::path& p) {
  try {
    return parse_domain(read_file(p));
  } catch (const ParseError& e) {
    throw Failure(p.string() + ":" + e.what());
  }
}

// One demonstration per line: "(lift-block-table red-block table) (place-in-drawer red-block drawer)".
std::vector<std::vector<GroundBehavior>> load_corpus(const fs::path& p, const DomainModel& model) {
  ObjectSet objects = objects_of(model);
  std::vector<std::vector<GroundBehavior>> out;
  std::istringstream in(read_file(p));
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    std::vector<SExpr> forms;
    try {
      forms = read_sexprs(line);
    } catch (const ParseError& e) {
      throw Failure(p.string() + ":" + std::to_string(n) + ": " + e.detail());
    }
    if (forms.empty()) continue;
    std::vector<GroundBehavior> seq;
    for (const auto& f : forms) {
      if (!f.is_list() || f.items.empty())
        throw Failure(p.string() + ":" + std::to_string(n) + ": expected (behavior args...)");
      std::string name = normalize_identifier(f.items[0].text);
      const auto* s = model.find_schema(name);
      if (!s) throw Failure(p.string() + ":" + std::to_string(n) + ": unknown behavior " + name);
      if (f.items.size() != s->params.size() + 1)
        throw Failure(p.string() + ":" + std::to_string(n) + ": wrong number of arguments for " + name);
      Binding b;
      for (std::size_t i = 0; i < s->params.size(); ++i) b[s->params[i].name] = normalize_identifier(f.items[i + 1].text);
      try {
        seq.push_back(ground_schema(model, *s, b, objects));
      } catch (const std::exception& e) {
        throw Failure(p.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

int cmd_validate(const fs::path& file) {
  DomainModel m = load_domain(file);
  std::cout << "ok: domain " << m.name << ", " << m.predicates.size() << " predicates, " << m.schemas.size()
            << " behaviors\n";
  return 0;
}

int cmd_segment(const fs::path& traces, const std::optional<fs::path>& annotations) {
  std::optional<std::string> ann;
  if (annotations) ann = read_file(*annotations);
  auto demos = load_traces(read_file(traces), ann ? std::optional<std::string_view>(*ann) : std::nullopt);
  for (std::size_t d = 0; d < demos.size(); ++d) {
    std::cout << "demo " << d << "\n";
    for (const auto& s : segment_trace(demos[d])) std::cout << "  " << s.start << "-" << s.end << " " << to_string(s.primitive) << "\n";
  }
  return 0;
}

int cmd_verify(const fs::path& domain, const fs::path& corpus, double threshold) {
  DomainModel m = load_domain(domain);
  auto report = verify_descriptions(load_corpus(corpus, m), m, threshold);
  std::cout << report_to_json(report) << "\n";
  return report.flagged.empty() && report.primitive_violations.empty() ? 0 : 1;
}

int cmd_annotate(const fs::path& domain, const fs::path& traces, const std::optional<fs::path>& annotations,
                 bool endpoints) {
  DomainModel m = load_domain(domain);
  std::optional<std::string> ann;
  if (annotations) ann = read_file(*annotations);
  auto demos = load_traces(read_file(traces), ann ? std::optional<std::string_view>(*ann) : std::nullopt);
  ObjectSet objects = objects_of(m);
  std::vector<std::vector<TimedBehavior>> timed;
  std::vector<std::size_t> counts;
  for (std::size_t d = 0; d < demos.size(); ++d) {
    std::vector<TimedBehavior> seq;
    for (const auto& seg : resegment(segment_trace(demos[d]), demos[d], m)) {
      const auto* s = m.find_schema(seg.behavior_name);
      bool complete = s && std::all_of(s->params.begin(), s->params.end(),
                                       [&](const Parameter& p) { return seg.binding.contains(p.name); });
      if (!seg.valid || !complete) {
        std::cerr << "demo " << d << ": skipping " << seg.behavior_name << " at " << seg.start << ": "
                  << (seg.valid ? "binding incomplete" : seg.error) << "\n";
        continue;
      }
      seq.push_back({ground_schema(m, *s, seg.binding, objects), seg.start, seg.end});
    }
    timed.push_back(std::move(seq));
    counts.push_back(demos[d].records.empty() ? 0 : demos[d].records.back().t + 1);
  }
  auto ds = endpoints ? annotate_endpoints(timed, counts, m) : annotate(timed, counts, m);
  std::cout << dataset_to_jsonl(ds);
  std::cerr << ds.entries.size() << " labels, " << ds.conflicts.size() << " conflicts\n";
  return 0;
}

int cmd_plan(const fs::path& domain, const fs::path& problem_file) {
  DomainModel m = load_domain(domain);
  Problem pb;
  try {
    pb = parse_problem(read_file(problem_file), m);
  } catch (const ParseError& e) {
    throw Failure(problem_file.string() + ":" + e.what());
  }
  ObjectSet objects = objects_of(m);
  for (const auto& o : pb.objects) objects.add(o);
  for (const auto& f : pb.static_init) objects.static_facts.insert(f);
  auto ops = instantiate_all(m, objects);
  AbstractState s;
  for (const auto& a : pb.init) s.set(a, true);
  s.close_world();
  auto r = plan(s, pb.goal, ops);
  if (!r.found()) {
    std::cerr << "no plan: " << to_string(r.status) << "\n";
    return 1;
  }
  for (const auto& b : r.steps) std::cout << to_string(b) << "\n";
  return 0;
}

std::map<std::string, DomainModel> agent_models(const std::vector<std::string>& files) {
  std::map<std::string, DomainModel> out;
  for (const auto& f : files) {
    DomainModel m = load_domain(f);
    out[m.name] = m;
  }
  return out;
}

int cmd_run(const fs::path& manifest, const BenchConfig& cfg, const std::string& only,
            const std::vector<std::string>& models, const std::optional<fs::path>& log_dir) {
  auto tasks = load_tasks_file(manifest);
  auto agents = agent_models(models);
  bool any = false;
  for (const auto& t : tasks) {
    if (!only.empty() && t.id != only) continue;
    any = true;
    const World& w = builtin_world(t.domain);
    const DomainModel& model = agents.contains(t.domain) ? agents.at(t.domain) : w.model;
    ExecutorConfig ec = cfg.executor;
    ec.seed = cfg.master_seed;
    ObservationConfig oc = t.observability;
    if (cfg.flip_prob) oc.flip_prob = *cfg.flip_prob;
    auto r = run_episode(w, init_domain(t.domain, t.sampler, cfg.master_seed), t.goal, model, ec, oc,
                         SkillConfig{cfg.skill_failure, cfg.master_seed + 1}, t.perturbations);
    std::cout << t.domain << "/" << t.id << ": " << (r.success ? "success" : "failure");
    if (r.failure_reason) std::cout << " (" << to_string(*r.failure_reason) << ")";
    std::cout << " steps=" << r.steps_used << " replans=" << r.replans << " perturbations=" << r.perturbations_fired
              << "\n";
    for (const auto& e : r.executed)
      std::cout << "  " << to_string(e.behavior) << (e.outcome == SkillOutcome::Success ? "" : "  [" + std::string(to_string(e.outcome)) + "]") << "\n";
    if (log_dir) {
      std::string text;
      for (const auto& l : r.log) text += l + "\n";
      write_file(*log_dir / (t.domain + "-" + t.id + ".jsonl"), text);
    }
  }
  if (!any) throw Failure("no task " + only + " in " + manifest.string());
  return 0;
}

std::vector<double> parse_levels(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--sweep-noise", "not a number: " + tok);
    }
  }
  return out;
}

int cmd_bench(const fs::path& manifest, const BenchConfig& cfg, const std::vector<std::string>& models,
              const std::optional<fs::path>& out, const std::string& sweep, std::size_t episodes,
              const std::string& only) {
  auto tasks = load_tasks_file(manifest);
  auto agents = agent_models(models);
  if (!only.empty()) {
    std::erase_if(tasks, [&](const TaskSpec& t) { return t.id != only; });
    if (tasks.empty()) throw Failure("no task " + only + " in " + manifest.string());
  }
  if (!sweep.empty()) {
    auto levels = parse_levels(sweep);
    std::string csv;
    for (const auto& t : tasks) {
      const DomainModel& m = agents.contains(t.domain) ? agents.at(t.domain) : builtin_world(t.domain).model;
      auto curve = sweep_noise(t, m, levels, episodes, cfg);
      std::cout << t.domain << "/" << t.id << "\n" << sweep_to_csv(curve);
      if (out) write_file(*out / (t.domain + "-" + t.id + "-noise.csv"), sweep_to_csv(curve));
    }
    return 0;
  }
  auto rep = run_benchmark(tasks, agents, cfg);
  std::cout << format_table(rep);
  if (out) write_file(*out / "report.json", report_to_json(rep));
  return 0;
}

int cmd_prompt(const fs::path& config, const std::string& label, bool predicates) {
  auto cfg = load_domain_config(config);
  auto inputs = make_generation_inputs(cfg);
  if (predicates) {
    std::vector<std::string> labels;
    for (const auto& c : inputs.contexts) labels.push_back(c.behavior_label);
    auto b = build_predicate_prompt(cfg.objects, labels);
    std::cout << b.system_text() << "\n\n" << b.user_part << "\n";
    return 0;
  }
  for (const auto& c : inputs.contexts) {
    if (c.behavior_label != label && normalize_identifier(c.behavior_label) != normalize_identifier(label)) continue;
    auto b = build_behavior_prompt(c);
    for (const auto& p : b.system_parts) std::cout << "=== system: " << p.name << " ===\n" << p.text << "\n\n";
    std::cout << "=== user ===\n" << b.user_part << "\n";
    return 0;
  }
  throw Failure("unknown behavior label " + label);
}

int cmd_generate(const fs::path& config, const std::optional<fs::path>& fixtures, bool live, bool record,
                 const std::optional<fs::path>& out, std::optional<std::size_t> retries) {
  auto cfg = load_domain_config(config);
  auto inputs = make_generation_inputs(cfg);
  fs::path root = fixtures ? *fixtures : cfg.fixtures;
  std::unique_ptr<LlmClient> client;
  if (live) {
    auto hc = HttpClientConfig::from_env();
    hc.domain = cfg.domain;
    if (record) hc.record_root = root;
    client = std::make_unique<HttpClient>(hc);
  } else {
    client = std::make_unique<FixtureClient>(root, cfg.domain);
  }
  auto res = generate_with_verification(inputs.contexts, *client, cfg.skeleton, inputs.corpus,
                                        retries.value_or(cfg.max_retries), cfg.threshold);
  for (const auto& [label, o] : res.labels) {
    std::cerr << label << ": " << (o.accepted ? "accepted" : "FAILED") << " retries=" << o.retries << "\n";
    for (const auto& a : o.attempts)
      for (const auto& e : a.errors) std::cerr << "  attempt " << a.attempt << ": " << e << "\n";
  }
  std::cerr << res.model.schemas.size() << " behaviors, " << res.verification.flagged.size() << " flagged\n";
  std::string text = print_domain(res.model);
  if (out) write_file(*out, text);
  else std::cout << text;
  return res.ok() ? 0 : 1;
}

int cmd_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Failure(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::size_t shown = 0;
  for (const auto& f : files) {
    if (f.extension() == ".json") {
      try {
        auto rep = report_from_json(read_file(f));
        std::cout << "# " << f.filename().string() << "\n" << format_table(rep);
        ++shown;
      } catch (const BenchError&) {
      }
    } else if (f.extension() == ".csv") {
      std::cout << "# " << f.filename().string() << "\n" << read_file(f);
      ++shown;
    }
  }
  if (shown == 0) throw Failure("no reports in " + dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blade: behavior models from demonstrations"};
  app.require_subcommand(1);

  fs::path a_file, b_file;
  std::optional<fs::path> annotations, out_path, fixtures_dir, log_dir;
  bool endpoints = false, live = false, record = false, predicates = false;
  double threshold = 0.1, noise = 0.0, skill_failure = 0.0;
  std::uint64_t seed = 0;
  std::size_t states = 20, seeds = 3, threads = 0, episodes = 100;
  std::optional<std::size_t> retries;
  std::string label, sweep, only;
  std::vector<std::string> models;

  auto* validate = app.add_subcommand("validate", "Parse and check a domain file");
  validate->add_option("domain-file", a_file)->required()->check(CLI::ExistingFile);

  auto* segment = app.add_subcommand("segment", "Split a trace into contact primitives");
  segment->add_option("trace-file", a_file)->required()->check(CLI::ExistingFile);
  segment->add_option("--annotations", annotations, "Annotation document")->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Replay behavior sequences against their preconditions");
  verify->add_option("domain", a_file)->required()->check(CLI::ExistingFile);
  verify->add_option("corpus", b_file, "One demonstration per line")->required()->check(CLI::ExistingFile);
  verify->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));

  auto* annot = app.add_subcommand("annotate", "Label trace steps with predicate values");
  annot->add_option("domain", a_file)->required()->check(CLI::ExistingFile);
  annot->add_option("corpus", b_file, "Trace records")->required()->check(CLI::ExistingFile);
  annot->add_option("--annotations", annotations)->check(CLI::ExistingFile);
  annot->add_flag("--endpoints-baseline", endpoints);

  auto* plan_cmd = app.add_subcommand("plan", "Plan for a problem");
  plan_cmd->add_option("domain", a_file)->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("problem", b_file)->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run one episode per task");
  run->add_option("task-manifest", a_file)->required()->check(CLI::ExistingFile);
  run->add_option("--noise", noise)->check(CLI::Range(0.0, 1.0));
  run->add_option("--skill-failure", skill_failure)->check(CLI::Range(0.0, 1.0));
  run->add_option("--seed", seed);
  run->add_option("--task", only);
  run->add_option("--model", models, "Agent domain file, keyed by domain name");
  run->add_option("--log-dir", log_dir);

  auto* bench = app.add_subcommand("bench", "Sampled states x seeds benchmark");
  bench->add_option("task-manifest", a_file)->required()->check(CLI::ExistingFile);
  bench->add_option("--states", states);
  bench->add_option("--seeds", seeds);
  bench->add_option("--seed", seed);
  bench->add_option("--noise", noise)->check(CLI::Range(0.0, 1.0));
  bench->add_option("--skill-failure", skill_failure)->check(CLI::Range(0.0, 1.0));
  bench->add_option("--threads", threads);
  bench->add_option("--task", only);
  bench->add_option("--model", models);
  bench->add_option("--out", out_path);
  bench->add_option("--sweep-noise", sweep, "Comma-separated flip probabilities");
  bench->add_option("--episodes", episodes, "Episodes per sweep level");

  auto* prompt = app.add_subcommand("prompt", "Print the generation prompt for a label");
  prompt->add_option("domain-config", a_file)->required()->check(CLI::ExistingFile);
  prompt->add_option("label", label);
  prompt->add_flag("--predicates", predicates, "Print the predicate-generation prompt");

  auto* generate = app.add_subcommand("generate", "Generate behavior definitions");
  generate->add_option("domain-config", a_file)->required()->check(CLI::ExistingFile);
  auto* fx = generate->add_option("--fixtures", fixtures_dir);
  auto* lv = generate->add_flag("--live", live);
  fx->excludes(lv);
  generate->add_flag("--record", record)->needs(lv);
  generate->add_option("--max-retries", retries);
  generate->add_option("--out", out_path);

  auto* report = app.add_subcommand("report", "Summarize benchmark outputs");
  report->add_option("log-dir", a_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    BenchConfig cfg;
    cfg.n_states = states;
    cfg.n_seeds = seeds;
    cfg.master_seed = seed;
    cfg.threads = threads;
    cfg.skill_failure = skill_failure;
    if (noise > 0) cfg.flip_prob = noise;

    if (*validate) return cmd_validate(a_file);
    if (*segment) return cmd_segment(a_file, annotations);
    if (*verify) return cmd_verify(a_file, b_file, threshold);
    if (*annot) return cmd_annotate(a_file, b_file, annotations, endpoints);
    if (*plan_cmd) return cmd_plan(a_file, b_file);
    if (*run) return cmd_run(a_file, cfg, only, models, log_dir);
    if (*bench) return cmd_bench(a_file, cfg, models, out_path, sweep, episodes, only);
    if (*prompt) {
      if (label.empty() && !predicates) {
        std::cerr << "usage error: label is required\n";
        return 2;
      }
      return cmd_prompt(a_file, label, predicates);
    }
    if (*generate) return cmd_generate(a_file, fixtures_dir, live, record, out_path, retries);
    if (*report) return cmd_report(a_file);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
