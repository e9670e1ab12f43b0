#include "blade/worldsim.hpp"

#include <algorithm>

namespace blade {

World::World(DomainModel m, std::string domain_id) : id(std::move(domain_id)), model(std::move(m)) {
  if (id.empty()) id = model.name;
  objects = objects_of(model);
  ops = instantiate_all(model, objects);
  std::set<Atom> u;
  for (const auto& op : ops)
    for (const Formula* f : {&op.pre_level1, &op.pre_level2, &op.eff})
      for (const auto& l : f->literals) u.insert(l.atom);
  universe.assign(u.begin(), u.end());
}

const GroundBehavior* World::find_op(const std::string& name, const std::vector<std::string>& args) const {
  for (const auto& op : ops)
    if (op.name == name && op.args == args) return &op;
  return nullptr;
}

bool World::in_universe(const Atom& atom) const { return std::binary_search(universe.begin(), universe.end(), atom); }

bool WorldState::holds(const Atom& atom) const {
  auto it = atoms.find(atom);
  return it != atoms.end() && it->second;
}

namespace {

Atom placement_of(const RevealRule& rule, const std::string& obj) {
  Atom a = rule.placement;
  for (auto& arg : a.args)
    if (is_variable(arg)) arg = obj;
  return a;
}

bool holds_literal(const WorldState& s, const Literal& l) { return s.holds(l.atom) == l.positive; }

void refresh_compartments(const World& world, WorldState& s) {
  const auto& rules = world.model.reveals;
  for (const auto& obj : world.objects.names) {
    std::vector<std::size_t> inside;
    for (std::size_t r = 0; r < rules.size(); ++r)
      if (s.holds(placement_of(rules[r], obj))) inside.push_back(r);
    if (inside.empty()) {
      s.compartment.erase(obj);
      continue;
    }
    auto it = s.compartment.find(obj);
    if (it != s.compartment.end() && std::find(inside.begin(), inside.end(), it->second) != inside.end()) continue;
    // Things are put where the robot can currently reach.
    std::size_t pick = inside.front();
    for (auto r : inside)
      if (holds_literal(s, rules[r].condition)) {
        pick = r;
        break;
      }
    s.compartment[obj] = pick;
  }
}

const ExclusionGroup* group_of(const World& world, const std::string& predicate) {
  for (const auto& g : world.model.exclusions)
    if (std::find(g.predicates.begin(), g.predicates.end(), predicate) != g.predicates.end()) return &g;
  return nullptr;
}

bool in_group(const ExclusionGroup& g, const Atom& a, const std::string& subject) {
  return !a.args.empty() && a.args[0] == subject &&
         std::find(g.predicates.begin(), g.predicates.end(), a.predicate) != g.predicates.end();
}

void apply_literals(const World& world, WorldState& s, const std::vector<Literal>& lits) {
  for (const auto& l : lits) {
    if (!world.in_universe(l.atom)) throw WorldError("atom " + to_string(l.atom) + " is not part of the domain");
    s.atoms[l.atom] = l.positive;
  }
  for (const auto& l : lits) {
    if (!l.positive || l.atom.args.empty()) continue;
    const auto* g = group_of(world, l.atom.predicate);
    if (!g) continue;
    for (const auto& a : world.universe)
      if (a != l.atom && in_group(*g, a, l.atom.args[0])) s.atoms[a] = false;
  }
  for (const auto& l : lits) {
    if (l.positive || l.atom.args.empty()) continue;
    const auto* g = group_of(world, l.atom.predicate);
    if (!g || !g->exactly_one) continue;
    std::vector<Atom> others;
    bool any = false;
    for (const auto& a : world.universe) {
      if (!in_group(*g, a, l.atom.args[0])) continue;
      if (s.holds(a)) any = true;
      bool named = std::any_of(lits.begin(), lits.end(), [&](const Literal& x) { return x.atom == a; });
      if (!named) others.push_back(a);
    }
    if (!any && others.size() == 1) s.atoms[others.front()] = true;
  }
  refresh_compartments(world, s);
}

}  // namespace

std::set<std::string> hidden_in(const World& world, const WorldState& state) {
  std::set<std::string> out;
  for (const auto& [obj, r] : state.compartment) {
    const auto& rule = world.model.reveals.at(r);
    if (state.holds(placement_of(rule, obj)) && !holds_literal(state, rule.condition)) out.insert(obj);
  }
  return out;
}

std::map<std::string, std::set<std::string>> container_contents(const World& world, const WorldState& state) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [obj, r] : state.compartment) {
    const auto& p = world.model.reveals.at(r).placement;
    for (const auto& arg : p.args)
      if (!is_variable(arg)) out[arg].insert(obj);
  }
  return out;
}

std::set<std::pair<std::string, std::string>> blocking(const WorldState& state) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [a, v] : state.atoms)
    if (v && a.predicate == "is-blocking" && a.args.size() == 2) out.insert({a.args[0], a.args[1]});
  return out;
}

std::vector<std::string> consistency_violations(const World& world, const WorldState& state) {
  std::vector<std::string> out;
  for (const auto& a : world.universe)
    if (!state.atoms.contains(a)) out.push_back("no value for " + to_string(a));
  for (const auto& g : world.model.exclusions) {
    std::map<std::string, std::vector<Atom>> by_subject;
    for (const auto& a : world.universe)
      if (!a.args.empty() && std::find(g.predicates.begin(), g.predicates.end(), a.predicate) != g.predicates.end())
        by_subject[a.args[0]];
    for (const auto& [a, v] : state.atoms)
      if (v && !a.args.empty() && by_subject.contains(a.args[0]) &&
          std::find(g.predicates.begin(), g.predicates.end(), a.predicate) != g.predicates.end())
        by_subject[a.args[0]].push_back(a);
    for (const auto& [subject, trues] : by_subject) {
      if (trues.size() > 1) {
        std::string msg = subject + " has several of";
        for (const auto& a : trues) msg += " " + to_string(a);
        out.push_back(msg);
      } else if (g.exactly_one && trues.empty()) {
        out.push_back(subject + " has none of its exclusive states");
      }
    }
  }
  return out;
}

WorldState make_state(const World& world, const std::vector<Atom>& true_atoms) {
  WorldState s;
  for (const auto& a : world.universe) s.atoms[a] = false;
  for (const auto& a : true_atoms) {
    if (!world.in_universe(a)) throw WorldError("atom " + to_string(a) + " is not part of the domain");
    s.atoms[a] = true;
  }
  refresh_compartments(world, s);
  return s;
}

std::string_view to_string(SkillOutcome o) {
  switch (o) {
    case SkillOutcome::Success:
      return "success";
    case SkillOutcome::Failed:
      return "failed";
    default:
      return "precondition-violated";
  }
}

SkillResult execute_skill(const World& world, const WorldState& state, const GroundBehavior& behavior,
                          const SkillConfig& cfg, std::mt19937_64& rng) {
  SkillResult r{state, SkillOutcome::PreconditionViolated, {}};
  ++r.state.step_count;
  const GroundBehavior* op = world.find_op(behavior.name, behavior.args);
  if (!op) {
    r.reason = "no skill " + to_string(behavior);
    return r;
  }
  auto hidden = hidden_in(world, state);
  for (const auto& a : op->args)
    if (hidden.contains(a)) {
      r.reason = a + " is not visible";
      return r;
    }
  for (const Formula* f : {&op->pre_level1, &op->pre_level2})
    for (const auto& l : f->literals)
      if (!holds_literal(state, l)) {
        r.reason = "unmet " + to_string(l);
        return r;
      }
  if (cfg.failure_prob > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.failure_prob) {
    r.outcome = SkillOutcome::Failed;
    r.reason = "skill failed";
    return r;
  }
  apply_literals(world, r.state, op->eff.literals);
  r.outcome = SkillOutcome::Success;
  return r;
}

WorldState apply_perturbation(const World& world, const WorldState& state, const std::vector<Literal>& delta) {
  WorldState s = state;
  apply_literals(world, s, delta);
  auto bad = consistency_violations(world, s);
  if (!bad.empty()) throw WorldError("perturbation leaves an inconsistent state: " + bad.front());
  return s;
}

AbstractState observe(const World& world, const WorldState& state, const ObservationConfig& cfg,
                      std::mt19937_64& rng) {
  AbstractState out;
  std::set<std::string> hidden;
  if (cfg.visibility_gating) hidden = hidden_in(world, state);
  std::bernoulli_distribution flip(std::clamp(cfg.flip_prob, 0.0, 1.0));
  for (const auto& a : world.universe) {
    bool gated = std::any_of(a.args.begin(), a.args.end(), [&](const std::string& x) { return hidden.contains(x); });
    if (gated) continue;
    bool v = state.holds(a);
    if (cfg.flip_prob > 0 && flip(rng)) v = !v;
    out.set(a, v);
  }
  return out;
}

bool goal_satisfied(const World& world, const WorldState& state, const Formula& goal) {
  for (const auto& l : goal.literals) {
    if (!world.in_universe(l.atom)) throw std::invalid_argument("goal atom " + to_string(l.atom) + " is not part of the domain");
    if (!holds_literal(state, l)) return false;
  }
  return true;
}

AbstractState truth_state(const WorldState& state) {
  AbstractState out;
  for (const auto& [a, v] : state.atoms) out.set(a, v);
  out.close_world();
  return out;
}

RenderedDemo render_demo(const World& world, const WorldState& state, const std::vector<GroundBehavior>& sequence,
                         const RenderConfig& cfg) {
  RenderedDemo out;
  auto& recs = out.trajectory.records;
  bool open = true;
  std::optional<std::string> held;
  WorldState s = state;
  std::mt19937_64 rng(0);
  auto fill = [&](const WorldState& ws) {
    while (out.states.size() < recs.size()) out.states.push_back(ws);
  };
  try {
    for (const auto& b : sequence) {
      auto r = execute_skill(world, s, b, SkillConfig{}, rng);
      if (r.outcome != SkillOutcome::Success)
        throw WorldError("cannot execute " + to_string(b) + ": " + r.reason);
      const GroundBehavior& op = *world.find_op(b.name, b.args);
      std::size_t approach = recs.size();
      if (open && !op.body.empty()) {
        std::optional<std::string> target = op.body.front().args.empty() ? std::nullopt : op.body.front().args[0];
        render_primitives({ContactPrimitive::make(PrimitiveKind::MoveTo, {target})}, cfg, recs, open, held);
      }
      std::size_t first = recs.size();
      render_primitives(op.body, cfg, recs, open, held);
      if (recs.size() == first) throw WorldError(to_string(b) + " has an empty body");
      std::size_t last = recs.size() - 1;
      fill(s);
      out.states.back() = r.state;
      s = r.state;
      s.step_count = state.step_count;
      out.spans.push_back({first, last});
      std::string label = b.name;
      std::replace(label.begin(), label.end(), '-', '_');
      out.trajectory.annotations.push_back({recs[approach].t, recs[last].t, label});
    }
    if (open)
      render_primitives({ContactPrimitive::make(PrimitiveKind::MoveTo, {std::nullopt})}, cfg, recs, open, held);
    else
      render_primitives({ContactPrimitive::make(PrimitiveKind::Move, {held})}, cfg, recs, open, held);
  } catch (const ModelError& e) {
    throw WorldError(std::string("cannot render the sequence: ") + e.what());
  }
  fill(s);
  return out;
}

DemoTrajectory emit_trace(const World& world, const WorldState& state, const std::vector<GroundBehavior>& sequence,
                          const RenderConfig& cfg) {
  return render_demo(world, state, sequence, cfg).trajectory;
}

namespace {

bool gripper_allows(const GroundBehavior& op, const std::optional<std::string>& held) {
  if (op.body.empty()) return false;
  const auto& head = op.body.front();
  if (head.kind == PrimitiveKind::Place) return held && head.args[0] == held;
  return !held;
}

std::optional<std::string> held_after(const GroundBehavior& op, const std::optional<std::string>& held) {
  const auto& tail = op.body.back().kind;
  if (tail == PrimitiveKind::Move) return op.body.front().args[0];
  if (tail == PrimitiveKind::Place) return std::nullopt;
  return held;
}

}  // namespace

std::vector<Demo> generate_corpus(const World& world, std::size_t count, std::uint64_t seed,
                                  const CorpusConfig& cfg) {
  std::vector<Demo> out;
  std::mt19937_64 rng(seed);
  std::size_t attempt = 0;
  const auto read = level1_predicates(world.model);
  while (out.size() < count) {
    if (++attempt > 100 * (count + 1)) throw WorldError("could not generate enough demonstrations");
    Demo d;
    d.initial = init_domain(world.id, "demo", rng());
    std::size_t length =
        std::uniform_int_distribution<std::size_t>(cfg.min_length, std::max(cfg.min_length, cfg.max_length))(rng);
    WorldState s = d.initial;
    std::optional<std::string> held;
    std::mt19937_64 skill_rng(0);
    for (std::size_t k = 0; k < length; ++k) {
      std::vector<const GroundBehavior*> options;
      for (const auto& op : world.ops) {
        if (!gripper_allows(op, held)) continue;
        bool changes = std::all_of(op.eff.literals.begin(), op.eff.literals.end(), [&](const Literal& l) {
          return s.holds(l.atom) != l.positive || !read.contains(l.atom.predicate);
        });
        bool any = std::any_of(op.eff.literals.begin(), op.eff.literals.end(),
                               [&](const Literal& l) { return s.holds(l.atom) != l.positive; });
        if (!changes || !any) continue;
        auto trial = execute_skill(world, s, op, SkillConfig{}, skill_rng);
        if (trial.outcome == SkillOutcome::Success) options.push_back(&op);
      }
      if (options.empty()) break;
      // Uniform over behavior names first, so heavily grounded schemas do not crowd out the rest.
      std::vector<std::string> names;
      for (const auto* op : options)
        if (std::find(names.begin(), names.end(), op->name) == names.end()) names.push_back(op->name);
      const auto& name = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
      std::vector<const GroundBehavior*> same;
      for (const auto* op : options)
        if (op->name == name) same.push_back(op);
      const auto* pick = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)];
      s = execute_skill(world, s, *pick, SkillConfig{}, skill_rng).state;
      held = held_after(*pick, held);
      d.behaviors.push_back(*pick);
    }
    if (d.behaviors.size() < cfg.min_length) continue;
    d.rendered = render_demo(world, d.initial, d.behaviors, cfg.render);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace blade
