#include "blade/operator_lab.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace blade {

using nlohmann::json;

std::vector<BodyViolation> check_body_wellformed(const BehaviorSchema& schema) {
  using K = PrimitiveKind;
  std::vector<BodyViolation> out;
  const auto& body = schema.body;
  for (std::size_t i = 1; i < body.size(); ++i)
    if (body[i - 1].kind == K::Grasp && body[i].kind == K::Grasp)
      out.push_back({"adjacency", i, "grasp directly after grasp"});

  static const std::vector<std::vector<K>> combos{
      {K::Grasp, K::Move}, {K::Place}, {K::Grasp, K::Move, K::Place}, {K::Close, K::Push, K::Open}};
  std::vector<K> kinds;
  for (const auto& p : body) kinds.push_back(p.kind);
  if (std::find(combos.begin(), combos.end(), kinds) == combos.end()) {
    std::string shape;
    for (auto k : kinds) shape += (shape.empty() ? "" : " ") + std::string(to_string(k));
    out.push_back({"combo", 0, "body [" + shape + "] is not one of the allowed combinations"});
    return out;
  }
  // The held object stays the same from grasp through move and place.
  std::optional<std::string> held;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const auto& p = body[i];
    if (p.kind != K::Grasp && p.kind != K::Move && p.kind != K::Place) continue;
    const auto& x = p.args[0];
    if (!x) continue;
    if (held && *held != *x) out.push_back({"arg-consistency", i, *x + " is not the object held (" + *held + ")"});
    if (!held) held = x;
  }
  return out;
}

VerificationReport verify_descriptions(const std::vector<std::vector<GroundBehavior>>& sequences,
                                       const DomainModel& model, double threshold) {
  VerificationReport r;
  r.threshold = threshold;
  std::set<std::string> used;
  for (const auto& seq : sequences) {
    std::map<Atom, bool> pred;
    for (const auto& b : seq) {
      const BehaviorSchema* s = model.find_schema(b.name);
      if (!s) throw std::invalid_argument("unknown behavior " + b.name);
      if (b.args.size() != s->params.size()) throw std::invalid_argument("wrong arity for " + b.name);
      used.insert(b.name);
      Binding binding = b.binding(*s);
      for (const auto& lit : substitute(s->pre_level1, binding).literals) {
        auto [it, inserted] = pred.try_emplace(lit.atom, lit.positive);
        if (!inserted && it->second != lit.positive) ++r.error_count[b.name];
      }
      for (const auto& lit : substitute(s->eff, binding).literals) pred[lit.atom] = lit.positive;
      ++r.occurrence_count[b.name];
    }
  }
  for (const auto& [name, n] : r.occurrence_count) {
    std::size_t errs = r.error_count.contains(name) ? r.error_count[name] : 0;
    r.error_count[name] = errs;
    r.error_rate[name] = static_cast<double>(errs) / static_cast<double>(n);
    if (r.error_rate[name] > threshold) r.flagged.insert(name);
  }
  for (const auto& name : used)
    for (const auto& v : check_body_wellformed(*model.find_schema(name)))
      r.primitive_violations.push_back({name, v.rule, "body[" + std::to_string(v.index) + "]: " + v.message});
  return r;
}

std::string report_to_json(const VerificationReport& r) {
  json behaviors = json::object();
  for (const auto& [name, n] : r.occurrence_count)
    behaviors[name] = {{"occurrences", n},
                       {"errors", r.error_count.at(name)},
                       {"error_rate", r.error_rate.at(name)},
                       {"flagged", r.flagged.contains(name)}};
  json violations = json::array();
  for (const auto& v : r.primitive_violations)
    violations.push_back({{"behavior", v.behavior}, {"rule", v.rule}, {"location", v.location}});
  json doc{{"threshold", r.threshold},
           {"behaviors", behaviors},
           {"flagged", std::vector<std::string>(r.flagged.begin(), r.flagged.end())},
           {"primitive_violations", violations}};
  return doc.dump(2);
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::Pre:
      return "pre";
    case LabelSource::Eff:
      return "eff";
    default:
      return "propagated";
  }
}

std::string dataset_to_jsonl(const PredicateDataset& d) {
  std::string out;
  for (const auto& e : d.entries) {
    json j{{"step", e.step}, {"atom", to_string(e.atom)}, {"label", e.label}, {"source", to_string(e.source)}};
    if (e.demo) j["demo"] = e.demo;
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

class Labeler {
 public:
  Labeler(std::size_t demo, PredicateDataset& out) : demo_(demo), out_(out) {}

  void label(std::size_t step, const Atom& atom, bool value, LabelSource src, const std::string& by) {
    auto key = std::make_pair(step, atom);
    auto it = seen_.find(key);
    if (it == seen_.end()) {
      seen_.emplace(key, Seen{value, out_.entries.size(), by, false});
      out_.entries.push_back({demo_, step, atom, value, src});
      return;
    }
    if (it->second.value == value || it->second.conflicted) return;
    out_.conflicts.push_back({demo_, step, atom, it->second.by, by});
    it->second.conflicted = true;
    dropped_.push_back(it->second.index);
  }

  void finish() {
    std::sort(dropped_.begin(), dropped_.end());
    for (auto i = dropped_.rbegin(); i != dropped_.rend(); ++i)
      out_.entries.erase(out_.entries.begin() + static_cast<std::ptrdiff_t>(*i));
  }

 private:
  struct Seen {
    bool value;
    std::size_t index;
    std::string by;
    bool conflicted;
  };
  std::size_t demo_;
  PredicateDataset& out_;
  std::map<std::pair<std::size_t, Atom>, Seen> seen_;
  std::vector<std::size_t> dropped_;
};

std::vector<Literal> fluent(const Formula& f, const DomainModel& model) {
  std::vector<Literal> out;
  for (const auto& l : f.literals)
    if (!model.is_static(l.atom.predicate)) out.push_back(l);
  return out;
}

// Setting `a` true forces `b` false.
bool exclusive(const DomainModel& model, const Atom& a, const Atom& b) {
  if (a.args.empty() || b.args.empty() || a.args[0] != b.args[0]) return false;
  for (const auto& g : model.exclusions) {
    auto has = [&](const std::string& p) { return std::find(g.predicates.begin(), g.predicates.end(), p) != g.predicates.end(); };
    if (has(a.predicate) && has(b.predicate)) return true;
  }
  return false;
}

void annotate_one(const std::vector<TimedBehavior>& demo, std::size_t count, std::size_t demo_index,
                  const DomainModel& model, bool propagate, PredicateDataset& out) {
  if (demo.empty()) return;
  if (count == 0) throw std::invalid_argument("observation count is zero");
  struct Resolved {
    std::vector<Literal> pre, eff;
    std::size_t start, end;
    std::string name;
  };
  std::vector<Resolved> rs;
  for (const auto& tb : demo) {
    const BehaviorSchema* s = model.find_schema(tb.behavior.name);
    if (!s) throw std::invalid_argument("unknown behavior " + tb.behavior.name);
    if (tb.start > tb.end || tb.end >= count)
      throw std::invalid_argument("segment of " + tb.behavior.name + " outside [0, " + std::to_string(count) + ")");
    Binding b = tb.behavior.binding(*s);
    rs.push_back({fluent(substitute(s->pre_level1, b), model), fluent(substitute(s->eff, b), model), tb.start,
                  tb.end, to_string(tb.behavior)});
  }
  // Effects on predicates no behavior reads (geometric bookkeeping) may be
  // no-ops, so they get no label before the behavior.
  const auto read = level1_predicates(model);
  Labeler lab(demo_index, out);
  for (std::size_t k = 0; k < rs.size(); ++k) {
    const auto& r = rs[k];
    for (const auto& l : r.pre) lab.label(r.start, l.atom, l.positive, LabelSource::Pre, r.name);
    for (const auto& l : r.eff)
      if (read.contains(l.atom.predicate)) lab.label(r.start, l.atom, !l.positive, LabelSource::Eff, r.name);
    for (const auto& l : r.eff) {
      lab.label(r.end, l.atom, l.positive, LabelSource::Eff, r.name);
      if (!propagate) continue;
      std::size_t stop = count - 1;
      for (std::size_t j = k + 1; j < rs.size(); ++j) {
        bool altered = std::any_of(rs[j].eff.begin(), rs[j].eff.end(), [&](const Literal& x) {
          return x.atom == l.atom || (l.positive && x.positive && exclusive(model, x.atom, l.atom));
        });
        if (altered) {
          stop = rs[j].start;
          break;
        }
      }
      for (std::size_t t = r.end + 1; t <= stop; ++t) lab.label(t, l.atom, l.positive, LabelSource::Propagated, r.name);
    }
  }
  lab.finish();
}

PredicateDataset run(const std::vector<std::vector<TimedBehavior>>& demos, const std::vector<std::size_t>& counts,
                     const DomainModel& model, bool propagate) {
  if (counts.size() != demos.size()) throw std::invalid_argument("one observation count per demonstration");
  PredicateDataset out;
  for (std::size_t d = 0; d < demos.size(); ++d) annotate_one(demos[d], counts[d], d, model, propagate, out);
  return out;
}

}  // namespace

PredicateDataset annotate(const std::vector<std::vector<TimedBehavior>>& demos,
                          const std::vector<std::size_t>& counts, const DomainModel& model) {
  return run(demos, counts, model, true);
}

PredicateDataset annotate(const std::vector<TimedBehavior>& demo, std::size_t count, const DomainModel& model) {
  return run({demo}, {count}, model, true);
}

PredicateDataset annotate_endpoints(const std::vector<std::vector<TimedBehavior>>& demos,
                                    const std::vector<std::size_t>& counts, const DomainModel& model) {
  return run(demos, counts, model, false);
}

PredicateDataset annotate_endpoints(const std::vector<TimedBehavior>& demo, std::size_t count,
                                    const DomainModel& model) {
  return run({demo}, {count}, model, false);
}

namespace {

void finalize(Scores& s) {
  s.precision = s.predictions ? static_cast<double>(s.correct) / static_cast<double>(s.predictions) : 1.0;
  s.recall = s.positives ? static_cast<double>(s.correct) / static_cast<double>(s.positives) : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
}

}  // namespace

AnnotationMetrics evaluate_annotation(const PredicateDataset& dataset,
                                      const std::vector<std::vector<AbstractState>>& truth) {
  AnnotationMetrics m;
  for (const auto& e : dataset.entries) {
    if (e.demo >= truth.size() || e.step >= truth[e.demo].size())
      throw std::out_of_range("no truth for demo " + std::to_string(e.demo) + " step " + std::to_string(e.step));
    Truth t = truth[e.demo][e.step].get(e.atom);
    bool correct = t != Truth::Unknown && (t == Truth::True) == e.label;
    auto& p = m.per_predicate[e.atom.predicate];
    ++m.overall.predictions;
    ++p.predictions;
    if (correct) {
      ++m.overall.correct;
      ++p.correct;
    }
  }
  for (const auto& demo : truth)
    for (const auto& state : demo)
      for (const auto& [atom, v] : state.known()) {
        ++m.overall.positives;
        ++m.per_predicate[atom.predicate].positives;
      }
  finalize(m.overall);
  for (auto& [_, s] : m.per_predicate) finalize(s);
  return m;
}

}  // namespace blade
