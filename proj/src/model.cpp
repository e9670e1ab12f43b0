#include "blade/model.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace blade {

std::string normalize_identifier(std::string_view id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    if (c == '_') {
      out.push_back('-');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const std::string& a) { return is_variable(a); });
}

bool Atom::mentions(std::string_view term) const {
  return std::find(args.begin(), args.end(), term) != args.end();
}

std::string to_string(const Atom& atom) {
  std::string out = "(" + atom.predicate;
  for (const auto& a : atom.args) out += " " + a;
  return out + ")";
}

std::string to_string(const Literal& lit) {
  return lit.positive ? to_string(lit.atom) : "(not " + to_string(lit.atom) + ")";
}

bool Formula::add(const Literal& lit) {
  if (contains(lit)) return true;
  if (contains(lit.negated())) return false;
  literals.push_back(lit);
  return true;
}

bool Formula::contains(const Literal& lit) const {
  return std::find(literals.begin(), literals.end(), lit) != literals.end();
}

namespace {

struct PrimitiveInfo {
  PrimitiveKind kind;
  std::string_view name;
  std::size_t arity;
};

constexpr PrimitiveInfo kPrimitives[] = {
    {PrimitiveKind::Open, "open", 0},   {PrimitiveKind::Close, "close", 0},
    {PrimitiveKind::MoveTo, "move-to", 1}, {PrimitiveKind::Grasp, "grasp", 2},
    {PrimitiveKind::Place, "place", 2}, {PrimitiveKind::Move, "move", 1},
    {PrimitiveKind::Push, "push", 1},
};

const PrimitiveInfo& info(PrimitiveKind kind) {
  for (const auto& p : kPrimitives)
    if (p.kind == kind) return p;
  throw ModelError("bad primitive kind");
}

}  // namespace

std::string_view to_string(PrimitiveKind kind) { return info(kind).name; }

std::optional<PrimitiveKind> primitive_kind_from(std::string_view name) {
  std::string n = normalize_identifier(name);
  for (const auto& p : kPrimitives)
    if (p.name == n) return p.kind;
  return std::nullopt;
}

std::size_t primitive_arity(PrimitiveKind kind) { return info(kind).arity; }

bool is_gripper_event(PrimitiveKind kind) {
  return kind == PrimitiveKind::Open || kind == PrimitiveKind::Close || kind == PrimitiveKind::Grasp ||
         kind == PrimitiveKind::Place;
}

ContactPrimitive ContactPrimitive::make(PrimitiveKind kind, std::vector<std::optional<std::string>> args) {
  std::size_t arity = primitive_arity(kind);
  if (args.size() > arity)
    throw ModelError(std::string(to_string(kind)) + " takes at most " + std::to_string(arity) + " arguments");
  for (const auto& a : args)
    if (a && a->empty()) throw ModelError("empty primitive argument; use nullopt for unspecified");
  args.resize(arity);
  return ContactPrimitive{kind, std::move(args)};
}

std::string to_string(const ContactPrimitive& prim) {
  std::string out = "(" + std::string(to_string(prim.kind));
  std::size_t last = prim.args.size();
  while (last > 0 && !prim.args[last - 1]) --last;
  for (std::size_t i = 0; i < last; ++i) out += " " + (prim.args[i] ? *prim.args[i] : std::string("_"));
  return out + ")";
}

bool BehaviorSchema::has_param(std::string_view var) const {
  return std::any_of(params.begin(), params.end(), [&](const Parameter& p) { return p.name == var; });
}

const BehaviorSchema* DomainModel::find_schema(std::string_view n) const {
  for (const auto& s : schemas)
    if (s.name == n) return &s;
  return nullptr;
}

const PredicateSignature* DomainModel::find_predicate(std::string_view n) const {
  for (const auto& p : predicates)
    if (p.name == n) return &p;
  return nullptr;
}

bool DomainModel::is_static(std::string_view predicate) const {
  const auto* sig = find_predicate(predicate);
  return sig && sig->is_static;
}

bool DomainModel::is_type_predicate(std::string_view predicate) const {
  return std::find(type_predicates.begin(), type_predicates.end(), predicate) != type_predicates.end();
}

std::string DomainModel::canonical_predicate(std::string_view n) const {
  for (const auto& [alias, canon] : aliases)
    if (alias == n) return canon;
  return std::string(n);
}

std::optional<std::string> DomainModel::param_type(const BehaviorSchema& schema, std::string_view var) const {
  std::optional<std::string> found;
  for (const auto& lit : schema.pre_level1.literals) {
    if (!lit.positive || lit.atom.args.size() != 1 || lit.atom.args[0] != var) continue;
    bool typed = type_predicates.empty() ? is_static(lit.atom.predicate) : is_type_predicate(lit.atom.predicate);
    if (!typed) continue;
    if (found) return std::nullopt;
    found = lit.atom.predicate;
  }
  return found;
}

std::set<std::string> level1_predicates(const DomainModel& model) {
  std::set<std::string> out;
  for (const auto& s : model.schemas)
    for (const auto& l : s.pre_level1.literals) out.insert(l.atom.predicate);
  return out;
}

void refresh_static_flags(DomainModel& model) {
  std::set<std::string> dynamic;
  auto collect = [&](const Formula& f) {
    for (const auto& l : f.literals) dynamic.insert(l.atom.predicate);
    for (const auto& u : f.universals) dynamic.insert(u.literal.atom.predicate);
  };
  for (const auto& s : model.schemas) collect(s.eff);
  for (const auto& a : model.pending_augmentations) collect(a.eff);
  for (auto& p : model.predicates) p.is_static = !dynamic.contains(p.name);
}

bool ObjectSet::contains(std::string_view name) const {
  return std::binary_search(names.begin(), names.end(), name);
}

void ObjectSet::add(std::string name) {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) names.insert(it, std::move(name));
}

ObjectSet objects_of(const DomainModel& model) {
  ObjectSet out;
  for (const auto& o : model.objects) out.add(o);
  for (const auto& f : model.static_facts) {
    out.static_facts.insert(f);
    for (const auto& a : f.args) out.add(a);
  }
  return out;
}

Binding GroundBehavior::binding(const BehaviorSchema& schema) const {
  Binding b;
  for (std::size_t i = 0; i < schema.params.size() && i < args.size(); ++i) b[schema.params[i].name] = args[i];
  return b;
}

std::string to_string(const GroundBehavior& behavior) {
  std::string out = "(" + behavior.name;
  for (const auto& a : behavior.args) out += " " + a;
  return out + ")";
}

Atom substitute(const Atom& atom, const Binding& binding) {
  Atom out{atom.predicate, {}};
  out.args.reserve(atom.args.size());
  for (const auto& a : atom.args) {
    auto it = binding.find(a);
    out.args.push_back(it == binding.end() ? a : it->second);
  }
  return out;
}

Literal substitute(const Literal& lit, const Binding& binding) { return {substitute(lit.atom, binding), lit.positive}; }

Formula substitute(const Formula& formula, const Binding& binding) {
  Formula out;
  for (const auto& l : formula.literals) out.add(substitute(l, binding));
  for (const auto& u : formula.universals) {
    Binding inner = binding;
    inner.erase(u.variable);
    out.universals.push_back({u.variable, substitute(u.literal, inner)});
  }
  return out;
}

namespace {

// Static literals must hold now; survivors (plus expanded universals) are kept.
bool reduce(const DomainModel& model, const Formula& in, const ObjectSet& objects, Formula& out,
            std::string* violated) {
  auto keep = [&](const Literal& lit) {
    if (model.is_static(lit.atom.predicate)) {
      if (objects.holds(lit.atom) != lit.positive) {
        if (violated) *violated = to_string(lit);
        return false;
      }
      return true;
    }
    if (!out.add(lit)) {
      if (violated) *violated = "contradiction at " + to_string(lit);
      return false;
    }
    return true;
  };
  for (const auto& l : in.literals)
    if (!keep(l)) return false;
  for (const auto& u : in.universals)
    for (const auto& o : objects.names)
      if (!keep(substitute(u.literal, Binding{{u.variable, o}}))) return false;
  return true;
}

}  // namespace

GroundBehavior ground_schema(const DomainModel& model, const BehaviorSchema& schema, const Binding& binding,
                             const ObjectSet& objects) {
  GroundBehavior g;
  g.name = schema.name;
  for (const auto& p : schema.params) {
    auto it = binding.find(p.name);
    if (it == binding.end()) throw GroundingError("partial binding: " + p.name + " unbound in " + schema.name);
    g.args.push_back(it->second);
  }
  std::string why;
  Formula pre1 = substitute(schema.pre_level1, binding);
  Formula pre2 = substitute(schema.pre_level2, binding);
  if (!reduce(model, pre1, objects, g.pre_level1, &why))
    throw GroundingError("type-predicate violation in " + to_string(g) + ": " + why);
  if (!reduce(model, pre2, objects, g.pre_level2, &why))
    throw GroundingError("static geometric precondition fails in " + to_string(g) + ": " + why);
  g.eff = substitute(schema.eff, binding);
  for (const auto& prim : schema.body) {
    ContactPrimitive c{prim.kind, {}};
    for (const auto& a : prim.args) {
      if (!a) {
        c.args.push_back(std::nullopt);
        continue;
      }
      auto it = binding.find(*a);
      c.args.push_back(it == binding.end() ? *a : it->second);
    }
    g.body.push_back(std::move(c));
  }
  return g;
}

std::vector<GroundBehavior> instantiate_schema(const DomainModel& model, const BehaviorSchema& schema,
                                               const ObjectSet& objects) {
  std::vector<GroundBehavior> out;
  const std::size_t n = schema.params.size();
  // Unary static literals prune each parameter's domain up front.
  std::vector<std::vector<std::string>> domains(n);
  std::vector<std::optional<std::string>> types(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& var = schema.params[i].name;
    types[i] = model.param_type(schema, var);
    for (const auto& o : objects.names) {
      bool ok = true;
      for (const auto& lit : schema.pre_level1.literals) {
        if (lit.atom.args.size() != 1 || lit.atom.args[0] != var || !model.is_static(lit.atom.predicate)) continue;
        if (objects.holds(Atom{lit.atom.predicate, {o}}) != lit.positive) {
          ok = false;
          break;
        }
      }
      if (ok) domains[i].push_back(o);
    }
  }
  std::vector<std::string> chosen(n);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      Binding b;
      for (std::size_t k = 0; k < n; ++k) b[schema.params[k].name] = chosen[k];
      try {
        out.push_back(ground_schema(model, schema, b, objects));
      } catch (const GroundingError&) {
      }
      return;
    }
    for (const auto& o : domains[i]) {
      bool clash = false;
      for (std::size_t k = 0; k < i && !clash; ++k)
        clash = chosen[k] == o && types[k] && types[k] == types[i];
      if (clash) continue;
      chosen[i] = o;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<GroundBehavior> instantiate_all(const DomainModel& model, const ObjectSet& objects) {
  std::vector<GroundBehavior> out;
  for (const auto& s : model.schemas) {
    auto part = instantiate_schema(model, s, objects);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace blade
