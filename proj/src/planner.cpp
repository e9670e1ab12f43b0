#include "blade/planner.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <unordered_map>

namespace blade {

namespace {

void require_ground(const Formula& f) {
  if (!f.universals.empty()) throw std::invalid_argument("formula has an unexpanded forall");
  for (const auto& l : f.literals)
    if (!l.atom.is_ground()) throw std::invalid_argument("unground atom " + to_string(l.atom));
}

using Bits = std::vector<std::uint64_t>;

struct BitsHash {
  std::size_t operator()(const Bits& b) const {
    std::size_t h = 1469598103934665603ull;
    for (auto w : b) h = (h ^ w) * 1099511628211ull;
    return h;
  }
};

bool test(const Bits& b, std::size_t i) { return (b[i / 64] >> (i % 64)) & 1u; }
void put(Bits& b, std::size_t i, bool v) {
  if (v)
    b[i / 64] |= std::uint64_t{1} << (i % 64);
  else
    b[i / 64] &= ~(std::uint64_t{1} << (i % 64));
}

struct CompiledOp {
  std::vector<std::size_t> pre_pos, pre_neg, add, del;
};

// The atoms an operator set and a goal can touch, with operators over indices.
struct Compiled {
  std::vector<Atom> atoms;
  std::map<Atom, std::size_t> index;
  std::vector<CompiledOp> ops;
  std::vector<std::size_t> goal_pos, goal_neg;

  std::size_t id(const Atom& a) {
    auto [it, inserted] = index.try_emplace(a, atoms.size());
    if (inserted) atoms.push_back(a);
    return it->second;
  }

  Compiled(const std::vector<GroundBehavior>& behaviors, const Goal& goal) {
    require_ground(goal);
    for (const auto& b : behaviors) {
      require_ground(b.pre_level1);
      require_ground(b.eff);
      CompiledOp op;
      for (const auto& l : b.pre_level1.literals) (l.positive ? op.pre_pos : op.pre_neg).push_back(id(l.atom));
      for (const auto& l : b.eff.literals) (l.positive ? op.add : op.del).push_back(id(l.atom));
      ops.push_back(std::move(op));
    }
    for (const auto& l : goal.literals) (l.positive ? goal_pos : goal_neg).push_back(id(l.atom));
  }

  Bits encode(const AbstractState& s) const {
    Bits b((atoms.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < atoms.size(); ++i) put(b, i, s.get(atoms[i]) == Truth::True);
    return b;
  }

  bool applicable(const Bits& s, const CompiledOp& op) const {
    for (auto i : op.pre_pos)
      if (!test(s, i)) return false;
    for (auto i : op.pre_neg)
      if (test(s, i)) return false;
    return true;
  }

  Bits successor(const Bits& s, const CompiledOp& op) const {
    Bits n = s;
    for (auto i : op.del) put(n, i, false);
    for (auto i : op.add) put(n, i, true);
    return n;
  }

  bool goal_holds(const Bits& s) const {
    for (auto i : goal_pos)
      if (!test(s, i)) return false;
    for (auto i : goal_neg)
      if (test(s, i)) return false;
    return true;
  }
};

// Delete relaxation over literal facts: fact 2a+1 is "a true", 2a is "a false".
class RelaxedGraph {
 public:
  explicit RelaxedGraph(const Compiled& c) : c_(c) {
    const std::size_t nf = 2 * c.atoms.size();
    achievers_.resize(nf);
    pre_.resize(c.ops.size());
    for (std::size_t o = 0; o < c.ops.size(); ++o) {
      const auto& op = c.ops[o];
      for (auto a : op.pre_pos) pre_[o].push_back(2 * a + 1);
      for (auto a : op.pre_neg) pre_[o].push_back(2 * a);
      for (auto a : op.add) achievers_[2 * a + 1].push_back(o);
      for (auto a : op.del) achievers_[2 * a].push_back(o);
    }
    for (auto a : c.goal_pos) goal_.push_back(2 * a + 1);
    for (auto a : c.goal_neg) goal_.push_back(2 * a);
  }

  std::size_t h(const Bits& s) const {
    const std::size_t nf = 2 * c_.atoms.size();
    std::vector<std::size_t> level(nf, kInfinite), op_level(c_.ops.size(), kInfinite);
    for (std::size_t a = 0; a < c_.atoms.size(); ++a) level[2 * a + (test(s, a) ? 1 : 0)] = 0;
    for (std::size_t k = 0;; ++k) {
      bool changed = false;
      for (std::size_t o = 0; o < c_.ops.size(); ++o) {
        if (op_level[o] != kInfinite) continue;
        bool ready = std::all_of(pre_[o].begin(), pre_[o].end(), [&](std::size_t f) { return level[f] <= k; });
        if (!ready) continue;
        op_level[o] = k;
        changed = true;
      }
      for (std::size_t o = 0; o < c_.ops.size(); ++o) {
        if (op_level[o] != k) continue;
        const auto& op = c_.ops[o];
        for (auto a : op.add) level[2 * a + 1] = std::min(level[2 * a + 1], k + 1);
        for (auto a : op.del) level[2 * a] = std::min(level[2 * a], k + 1);
      }
      if (!changed) break;
    }
    for (auto g : goal_)
      if (level[g] == kInfinite) return kInfinite;

    std::vector<char> chosen(c_.ops.size(), 0), done(nf, 0);
    std::vector<std::size_t> stack(goal_.begin(), goal_.end());
    std::size_t count = 0;
    while (!stack.empty()) {
      auto f = stack.back();
      stack.pop_back();
      if (done[f] || level[f] == 0) continue;
      done[f] = 1;
      std::size_t best = kInfinite;
      for (auto o : achievers_[f])
        if (op_level[o] + 1 == level[f]) {
          best = o;
          break;
        }
      if (chosen[best]) continue;
      chosen[best] = 1;
      ++count;
      for (auto p : pre_[best]) stack.push_back(p);
    }
    return count;
  }

 private:
  const Compiled& c_;
  std::vector<std::vector<std::size_t>> achievers_;
  std::vector<std::vector<std::size_t>> pre_;
  std::vector<std::size_t> goal_;
};

struct Node {
  Bits state;
  std::size_t parent;
  std::size_t op;
};

Plan extract(const std::vector<Node>& nodes, std::size_t i, const std::vector<GroundBehavior>& ops) {
  Plan out;
  while (nodes[i].parent != kInfinite) {
    out.push_back(ops[nodes[i].op]);
    i = nodes[i].parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

PlanResult breadth_first(const Compiled& c, const Bits& init, const std::vector<GroundBehavior>& ops,
                         std::size_t budget) {
  PlanResult r;
  std::vector<Node> nodes{{init, kInfinite, 0}};
  if (c.goal_holds(init)) {
    r.status = PlanStatus::Found;
    return r;
  }
  std::unordered_map<Bits, std::size_t, BitsHash> seen{{init, 0}};
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    if (r.expanded >= budget) {
      r.status = PlanStatus::BudgetExhausted;
      return r;
    }
    auto i = queue.front();
    queue.pop_front();
    ++r.expanded;
    for (std::size_t o = 0; o < c.ops.size(); ++o) {
      if (!c.applicable(nodes[i].state, c.ops[o])) continue;
      Bits next = c.successor(nodes[i].state, c.ops[o]);
      if (seen.contains(next)) continue;
      seen.emplace(next, nodes.size());
      nodes.push_back({std::move(next), i, o});
      if (c.goal_holds(nodes.back().state)) {
        r.status = PlanStatus::Found;
        r.steps = extract(nodes, nodes.size() - 1, ops);
        return r;
      }
      queue.push_back(nodes.size() - 1);
    }
  }
  r.status = PlanStatus::Unreachable;
  return r;
}

}  // namespace

Truth evaluate(const AbstractState& state, const Formula& formula) {
  require_ground(formula);
  Truth out = Truth::True;
  for (const auto& l : formula.literals) {
    Truth t = state.get(l.atom);
    out = kleene_and(out, l.positive ? t : kleene_not(t));
  }
  return out;
}

AbstractState project(const AbstractState& state) {
  AbstractState out = state;
  out.close_world();
  return out;
}

AbstractState apply(const AbstractState& state, const GroundBehavior& behavior) {
  if (evaluate(project(state), behavior.pre_level1) != Truth::True)
    throw PreconditionError("precondition of " + to_string(behavior) + " does not hold");
  AbstractState out = state;
  for (const auto& l : behavior.eff.literals) out.apply(l);
  return out;
}

std::size_t h_ff(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops) {
  Compiled c(ops, goal);
  RelaxedGraph g(c);
  return g.h(c.encode(project(state)));
}

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::Found:
      return "found";
    case PlanStatus::Unreachable:
      return "unreachable";
    default:
      return "budget-exhausted";
  }
}

PlanResult plan(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops,
                const PlannerConfig& cfg) {
  Compiled c(ops, goal);
  RelaxedGraph graph(c);
  Bits init = c.encode(project(state));
  PlanResult r;
  if (c.goal_holds(init)) {
    r.status = PlanStatus::Found;
    return r;
  }
  auto h0 = graph.h(init);
  if (h0 == kInfinite) return r;

  std::vector<Node> nodes{{init, kInfinite, 0}};
  std::unordered_map<Bits, std::size_t, BitsHash> seen{{init, 0}};
  using Entry = std::pair<std::size_t, std::size_t>;  // (h, node index == insertion order)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  open.push({h0, 0});
  while (!open.empty()) {
    if (r.expanded >= cfg.node_budget) {
      auto fb = breadth_first(c, init, ops, cfg.fallback_budget);
      fb.expanded += r.expanded;
      fb.used_fallback = true;
      return fb;
    }
    auto [h, i] = open.top();
    open.pop();
    ++r.expanded;
    for (std::size_t o = 0; o < c.ops.size(); ++o) {
      if (!c.applicable(nodes[i].state, c.ops[o])) continue;
      Bits next = c.successor(nodes[i].state, c.ops[o]);
      if (seen.contains(next)) continue;
      seen.emplace(next, nodes.size());
      nodes.push_back({std::move(next), i, o});
      const auto& s = nodes.back().state;
      if (c.goal_holds(s)) {
        r.status = PlanStatus::Found;
        r.steps = extract(nodes, nodes.size() - 1, ops);
        return r;
      }
      auto hn = graph.h(s);
      if (hn != kInfinite) open.push({hn, nodes.size() - 1});
    }
  }
  r.status = PlanStatus::Unreachable;
  return r;
}

PlanResult plan_bfs(const AbstractState& state, const Goal& goal, const std::vector<GroundBehavior>& ops,
                    std::size_t budget) {
  Compiled c(ops, goal);
  return breadth_first(c, c.encode(project(state)), ops, budget);
}

Simulation simulate_plan(const AbstractState& state, const Plan& plan) {
  Simulation sim{state, std::nullopt};
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (evaluate(project(sim.final_state), plan[i].pre_level1) != Truth::True) {
      sim.failed_index = i;
      return sim;
    }
    for (const auto& l : plan[i].eff.literals) sim.final_state.apply(l);
  }
  return sim;
}

Level2Result resolve_level2(const AbstractState& state, const GroundBehavior& behavior,
                            const std::vector<GroundBehavior>& ops, const PlannerConfig& cfg) {
  Level2Result out;
  if (evaluate(project(state), behavior.pre_level2) == Truth::True) return out;
  auto r = plan(state, behavior.pre_level2, ops, cfg);
  out.status = r.status;
  if (!r.found()) return out;
  AbstractState s = state;
  for (const auto& step : r.steps) {
    if (evaluate(project(s), step.pre_level2) != Truth::True) {
      out.status = PlanStatus::Unreachable;
      return out;
    }
    s = apply(s, step);
  }
  out.prefix = std::move(r.steps);
  return out;
}

std::vector<std::string> hidden_objects(const AbstractState& belief, const DomainModel& model,
                                        const std::vector<GroundBehavior>& ops) {
  std::set<Atom> universe;
  for (const auto& op : ops)
    for (const Formula* f : {&op.pre_level1, &op.pre_level2, &op.eff})
      for (const auto& l : f->literals) universe.insert(l.atom);
  std::vector<std::string> out;
  for (const auto& obj : model.objects) {
    bool any = false, known = false;
    for (const auto& a : universe) {
      if (!a.mentions(obj)) continue;
      any = true;
      if (belief.get(a) != Truth::Unknown) {
        known = true;
        break;
      }
    }
    if (any && !known) out.push_back(obj);
  }
  return out;
}

namespace {

Atom placement_for(const RevealRule& rule, const std::string& obj) {
  Atom a = rule.placement;
  for (auto& arg : a.args)
    if (is_variable(arg)) arg = obj;
  return a;
}

}  // namespace

void refute_reveals(const AbstractState& belief, const DomainModel& model, const std::vector<std::string>& hidden,
                    RefutedReveals& refuted) {
  for (std::size_t i = 0; i < model.reveals.size(); ++i) {
    Formula cond;
    cond.literals.push_back(model.reveals[i].condition);
    if (evaluate(belief, cond) != Truth::True) continue;
    for (const auto& obj : hidden) refuted.insert({i, obj});
  }
}

std::vector<GroundBehavior> with_optimistic_reveals(const std::vector<GroundBehavior>& ops, const DomainModel& model,
                                                    const std::vector<std::string>& hidden,
                                                    const RefutedReveals& refuted) {
  std::vector<GroundBehavior> out = ops;
  for (const auto& obj : hidden) {
    for (std::size_t i = 0; i < model.reveals.size(); ++i) {
      if (refuted.contains({i, obj})) continue;
      const auto& rule = model.reveals[i];
      Literal place{placement_for(rule, obj), true};
      bool needed = std::any_of(ops.begin(), ops.end(), [&](const GroundBehavior& op) {
        return op.pre_level1.contains(place);
      });
      if (!needed) continue;
      for (auto& op : out)
        if (op.eff.contains(rule.condition)) op.eff.add(place);
      break;
    }
  }
  return out;
}

}  // namespace blade
