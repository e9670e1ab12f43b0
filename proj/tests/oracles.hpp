#pragma once

// Slow reference searches over plain std::set states, sharing no code with
// the planner.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "blade/model.hpp"

namespace oracle {

using blade::Atom;
using blade::Formula;
using blade::GroundBehavior;
using blade::Literal;

using State = std::set<Atom>;  // true atoms, everything else false

inline bool holds(const State& s, const Literal& l) { return s.contains(l.atom) == l.positive; }

inline bool holds(const State& s, const Formula& f) {
  for (const auto& l : f.literals)
    if (!holds(s, l)) return false;
  return true;
}

inline State step(const State& s, const GroundBehavior& b) {
  State n = s;
  for (const auto& l : b.eff.literals)
    if (!l.positive) n.erase(l.atom);
  for (const auto& l : b.eff.literals)
    if (l.positive) n.insert(l.atom);
  return n;
}

// Shortest plan length, nullopt when unreachable. States are strings of
// '0'/'1' over a local atom index.
inline std::optional<std::size_t> bfs(const State& init, const Formula& goal, const std::vector<GroundBehavior>& ops) {
  std::map<Atom, std::size_t> idx;
  auto id = [&](const Atom& a) { return idx.try_emplace(a, idx.size()).first->second; };
  using Lits = std::vector<std::pair<std::size_t, bool>>;
  auto compile = [&](const Formula& f) {
    Lits out;
    for (const auto& l : f.literals) out.push_back({id(l.atom), l.positive});
    return out;
  };
  std::vector<std::pair<Lits, Lits>> cops;
  for (const auto& o : ops) cops.push_back({compile(o.pre_level1), compile(o.eff)});
  Lits g = compile(goal);
  std::string start(idx.size(), '0');
  for (const auto& a : init)
    if (idx.contains(a)) start[idx[a]] = '1';
  auto sat = [](const std::string& s, const Lits& ls) {
    for (auto [i, v] : ls)
      if ((s[i] == '1') != v) return false;
    return true;
  };
  std::map<std::string, std::size_t> dist{{start, 0}};
  std::deque<std::string> q{start};
  while (!q.empty()) {
    std::string s = q.front();
    q.pop_front();
    if (sat(s, g)) return dist[s];
    for (const auto& [pre, eff] : cops) {
      if (!sat(s, pre)) continue;
      std::string n = s;
      for (auto [i, v] : eff)
        if (!v) n[i] = '0';
      for (auto [i, v] : eff)
        if (v) n[i] = '1';
      if (dist.try_emplace(n, dist[s] + 1).second) q.push_back(n);
    }
  }
  return std::nullopt;
}

// Relaxed facts are literals: once reached, never lost.
using Facts = std::set<std::pair<Atom, bool>>;

inline Facts facts_of(const State& s, const std::vector<Atom>& universe) {
  Facts f;
  for (const auto& a : universe) f.insert({a, s.contains(a)});
  return f;
}

inline bool relaxed_holds(const Facts& f, const Formula& formula) {
  for (const auto& l : formula.literals)
    if (!f.contains({l.atom, l.positive})) return false;
  return true;
}

inline bool relaxed_reachable(Facts f, const Formula& goal, const std::vector<GroundBehavior>& ops) {
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& o : ops)
      if (relaxed_holds(f, o.pre_level1))
        for (const auto& l : o.eff.literals) grew |= f.insert({l.atom, l.positive}).second;
  }
  return relaxed_holds(f, goal);
}

// Optimal relaxed plan length by breadth-first search over fact sets.
inline std::optional<std::size_t> h_plus(const Facts& init, const Formula& goal, const std::vector<GroundBehavior>& ops) {
  std::set<Facts> seen{init};
  std::deque<std::pair<Facts, std::size_t>> q{{init, 0}};
  while (!q.empty()) {
    auto [f, d] = q.front();
    q.pop_front();
    if (relaxed_holds(f, goal)) return d;
    for (const auto& o : ops) {
      if (!relaxed_holds(f, o.pre_level1)) continue;
      Facts n = f;
      for (const auto& l : o.eff.literals) n.insert({l.atom, l.positive});
      if (seen.insert(n).second) q.push_back({n, d + 1});
    }
  }
  return std::nullopt;
}

// Literals over atoms outside `keep` are dropped; behaviors left with no
// effect go away.
inline std::vector<GroundBehavior> restrict_ops(const std::vector<GroundBehavior>& ops, const std::set<Atom>& keep) {
  auto cut = [&](const Formula& f) {
    Formula out;
    for (const auto& l : f.literals)
      if (keep.contains(l.atom)) out.literals.push_back(l);
    return out;
  };
  std::vector<GroundBehavior> out;
  for (const auto& o : ops) {
    GroundBehavior b = o;
    b.pre_level1 = cut(o.pre_level1);
    b.eff = cut(o.eff);
    b.pre_level2 = {};
    if (!b.eff.literals.empty()) out.push_back(b);
  }
  return out;
}

// Twelve CALVIN atoms: drawer, led, lightbulb, slider and one block.
inline const std::vector<Atom> kSub = {
    {"is-open", {"drawer"}},         {"is-close", {"drawer"}},           {"is-turned-on", {"led"}},
    {"is-turned-off", {"led"}},      {"is-on", {"red-block", "table"}},  {"is-lifted", {"red-block"}},
    {"is-in", {"red-block", "drawer"}}, {"is-slider-left", {"slider"}},  {"is-slider-right", {"slider"}},
    {"is-in", {"red-block", "slider"}}, {"is-turned-on", {"lightbulb"}}, {"is-turned-off", {"lightbulb"}}};

}  // namespace oracle
