#include "blade/dialect.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace blade {

namespace {

[[noreturn]] void fail(const SExpr& at, const std::string& message) { throw ParseError(message, at.pos); }

const SExpr& expect_list(const SExpr& e, std::string_view what) {
  if (!e.is_list()) fail(e, "expected " + std::string(what));
  return e;
}

std::string symbol(const SExpr& e, std::string_view what) {
  if (!e.is_symbol()) fail(e, "expected " + std::string(what));
  return normalize_identifier(e.text);
}

// Where the terms of a formula may come from.
struct TermScope {
  const std::vector<Parameter>* params = nullptr;  // null: ground formula
  const std::set<std::string>* constants = nullptr;  // null: any constant
  std::vector<std::string> bound;                    // forall variables
};

class Reader {
 public:
  explicit Reader(const DomainModel& model) : model_(model) {}

  std::string term(const SExpr& e, const TermScope& scope) const {
    std::string t = symbol(e, "term");
    if (is_variable(t)) {
      if (t.size() == 1) fail(e, "empty variable name");
      if (std::find(scope.bound.begin(), scope.bound.end(), t) != scope.bound.end()) return t;
      if (!scope.params) fail(e, "variable " + t + " in a ground formula");
      bool ok = std::any_of(scope.params->begin(), scope.params->end(),
                            [&](const Parameter& p) { return p.name == t; });
      if (!ok) fail(e, "variable " + t + " not in parameters");
      return t;
    }
    if (scope.constants && !scope.constants->contains(t)) fail(e, "unknown object " + t);
    return t;
  }

  Atom atom(const SExpr& e, const TermScope& scope) const {
    expect_list(e, "atom");
    if (e.items.empty()) fail(e, "empty atom");
    std::string name = model_.canonical_predicate(symbol(e.items[0], "predicate name"));
    const auto* sig = model_.find_predicate(name);
    if (!sig) fail(e, "undeclared predicate " + name);
    if (e.items.size() - 1 != sig->arity)
      fail(e, "arity mismatch for " + name + ": expected " + std::to_string(sig->arity) + ", got " +
                  std::to_string(e.items.size() - 1));
    Atom a{name, {}};
    for (std::size_t i = 1; i < e.items.size(); ++i) a.args.push_back(term(e.items[i], scope));
    return a;
  }

  Literal literal(const SExpr& e, const TermScope& scope) const {
    expect_list(e, "literal");
    if (e.head() == "not") {
      if (e.items.size() != 2) fail(e, "not takes one atom");
      return {atom(e.items[1], scope), false};
    }
    return {atom(e, scope), true};
  }

  void formula_into(const SExpr& e, const TermScope& scope, bool allow_forall, Formula& out) const {
    expect_list(e, "formula");
    if (e.items.empty()) return;
    std::string h = e.head();
    if (h == "and") {
      for (std::size_t i = 1; i < e.items.size(); ++i) formula_into(e.items[i], scope, allow_forall, out);
      return;
    }
    if (h == "forall") {
      if (!allow_forall) fail(e, "forall is only allowed in geometric preconditions");
      if (e.items.size() != 3) fail(e, "forall takes a variable list and one literal");
      const auto& vars = expect_list(e.items[1], "variable list");
      std::vector<std::string> names;
      for (std::size_t k = 0; k < vars.items.size(); ++k) {
        const auto& v = vars.items[k];
        if (v.is_symbol("-")) {
          ++k;
          continue;
        }
        std::string n = symbol(v, "variable");
        if (!is_variable(n)) fail(v, "expected variable");
        names.push_back(n);
      }
      if (names.size() != 1) fail(e, "forall binds exactly one variable");
      TermScope inner = scope;
      inner.bound.push_back(names[0]);
      Literal lit = literal(e.items[2], inner);
      Universal u{names[0], lit};
      if (std::find(out.universals.begin(), out.universals.end(), u) == out.universals.end())
        out.universals.push_back(u);
      return;
    }
    Literal lit = literal(e, scope);
    if (!out.add(lit)) fail(e, "contradictory formula: " + to_string(lit) + " and its negation");
  }

  Formula formula(const SExpr& e, const TermScope& scope, bool allow_forall) const {
    Formula f;
    formula_into(e, scope, allow_forall, f);
    return f;
  }

  std::vector<Parameter> params(const SExpr& e) const {
    expect_list(e, "parameter list");
    std::vector<Parameter> out;
    std::size_t untyped_from = 0;
    for (std::size_t i = 0; i < e.items.size(); ++i) {
      const auto& it = e.items[i];
      if (it.is_symbol("-")) {
        if (i + 1 >= e.items.size()) fail(it, "missing type after '-'");
        std::string type = symbol(e.items[++i], "type");
        for (std::size_t k = untyped_from; k < out.size(); ++k) out[k].type = type;
        untyped_from = out.size();
        continue;
      }
      std::string name = symbol(it, "parameter");
      if (!is_variable(name)) fail(it, "parameter must start with '?'");
      for (const auto& p : out)
        if (p.name == name) fail(it, "duplicate parameter " + name);
      out.push_back({name, "item"});
    }
    return out;
  }

  std::vector<ContactPrimitive> body(const SExpr& e, const TermScope& scope) const {
    expect_list(e, "body");
    std::vector<ContactPrimitive> out;
    if (e.items.empty()) return out;
    if (e.head() != "then") {
      out.push_back(primitive(e, scope));
      return out;
    }
    for (std::size_t i = 1; i < e.items.size(); ++i) out.push_back(primitive(e.items[i], scope));
    return out;
  }

  ContactPrimitive primitive(const SExpr& e, const TermScope& scope) const {
    expect_list(e, "contact primitive");
    if (e.items.empty()) fail(e, "empty primitive");
    auto kind = primitive_kind_from(symbol(e.items[0], "primitive name"));
    if (!kind) fail(e, "unknown primitive " + e.items[0].text);
    std::size_t arity = primitive_arity(*kind);
    if (e.items.size() - 1 > arity)
      fail(e, std::string(to_string(*kind)) + " takes at most " + std::to_string(arity) + " arguments");
    ContactPrimitive p{*kind, {}};
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      if (e.items[i].is_symbol("_")) {
        p.args.push_back(std::nullopt);
      } else {
        p.args.push_back(term(e.items[i], scope));
      }
    }
    p.args.resize(arity);
    return p;
  }

  // (:action NAME :parameters (...) :precondition F [:precondition-geometric F] :effect F :body B)
  BehaviorSchema schema(const SExpr& e, const std::set<std::string>* constants) const {
    if (e.items.size() < 2) fail(e, "action without a name");
    BehaviorSchema s;
    s.name = symbol(e.items[1], "action name");
    std::map<std::string, const SExpr*> keys;
    for (std::size_t i = 2; i < e.items.size(); i += 2) {
      std::string key = symbol(e.items[i], "keyword");
      if (i + 1 >= e.items.size()) fail(e.items[i], "missing value for " + key);
      static const std::set<std::string> known{":parameters", ":precondition", ":precondition-geometric",
                                                ":effect", ":body"};
      if (!known.contains(key)) fail(e.items[i], "unknown section " + key);
      if (keys.contains(key)) fail(e.items[i], "duplicate section " + key);
      keys[key] = &e.items[i + 1];
    }
    if (keys.contains(":parameters")) s.params = params(*keys[":parameters"]);
    TermScope scope{&s.params, constants, {}};
    if (keys.contains(":precondition")) s.pre_level1 = formula(*keys[":precondition"], scope, false);
    if (keys.contains(":precondition-geometric"))
      s.pre_level2 = formula(*keys[":precondition-geometric"], scope, true);
    if (keys.contains(":effect")) s.eff = formula(*keys[":effect"], scope, false);
    if (keys.contains(":body")) s.body = body(*keys[":body"], scope);
    return s;
  }

  Augmentation augmentation(const SExpr& e, const std::set<std::string>* constants) const {
    if (e.items.size() < 2) fail(e, "geometry without a behavior name");
    Augmentation a;
    a.behavior = symbol(e.items[1], "behavior name");
    std::map<std::string, const SExpr*> keys;
    for (std::size_t i = 2; i < e.items.size(); i += 2) {
      std::string key = symbol(e.items[i], "keyword");
      if (i + 1 >= e.items.size()) fail(e.items[i], "missing value for " + key);
      if (key != ":parameters" && key != ":precondition-geometric" && key != ":effect")
        fail(e.items[i], "unknown geometry section " + key);
      if (keys.contains(key)) fail(e.items[i], "duplicate section " + key);
      keys[key] = &e.items[i + 1];
    }
    if (keys.contains(":parameters")) a.params = params(*keys[":parameters"]);
    TermScope scope{&a.params, constants, {}};
    if (keys.contains(":precondition-geometric"))
      a.pre_level2 = formula(*keys[":precondition-geometric"], scope, true);
    if (keys.contains(":effect")) a.eff = formula(*keys[":effect"], scope, false);
    return a;
  }

 private:
  const DomainModel& model_;
};

std::set<std::string> known_constants(const DomainModel& m) {
  std::set<std::string> out(m.objects.begin(), m.objects.end());
  for (const auto& f : m.static_facts) out.insert(f.args.begin(), f.args.end());
  return out;
}

// Returns an error message, or empty on success.
std::string merge_augmentation(BehaviorSchema& s, const Augmentation& a) {
  if (a.params.size() != s.params.size())
    return "geometry for " + s.name + " has " + std::to_string(a.params.size()) + " parameters, behavior has " +
           std::to_string(s.params.size());
  Binding rename;
  for (std::size_t i = 0; i < a.params.size(); ++i) rename[a.params[i].name] = s.params[i].name;
  Formula pre = substitute(a.pre_level2, rename);
  for (const auto& l : pre.literals)
    if (!s.pre_level2.add(l)) return "contradictory geometric precondition in " + s.name;
  for (const auto& u : pre.universals)
    if (std::find(s.pre_level2.universals.begin(), s.pre_level2.universals.end(), u) ==
        s.pre_level2.universals.end())
      s.pre_level2.universals.push_back(u);
  for (const auto& l : substitute(a.eff, rename).literals)
    if (!s.eff.add(l)) return "contradictory effect in " + s.name;
  return {};
}

void merge_pending(DomainModel& m, const std::map<std::string, SourcePos>& where) {
  std::vector<Augmentation> rest;
  for (const auto& a : m.pending_augmentations) {
    auto it = std::find_if(m.schemas.begin(), m.schemas.end(), [&](const auto& s) { return s.name == a.behavior; });
    if (it == m.schemas.end()) {
      rest.push_back(a);
      continue;
    }
    std::string err = merge_augmentation(*it, a);
    if (!err.empty()) {
      auto p = where.find(a.behavior);
      throw ParseError(err, p == where.end() ? SourcePos{} : p->second);
    }
  }
  m.pending_augmentations = std::move(rest);
}

void validate_impl(DomainModel& m, const std::map<std::string, SourcePos>& where) {
  auto at = [&](const std::string& name) {
    auto it = where.find(name);
    return it == where.end() ? SourcePos{} : it->second;
  };
  refresh_static_flags(m);
  for (const auto& t : m.type_predicates) {
    const auto* sig = m.find_predicate(t);
    if (!sig) throw ParseError("type predicate " + t + " is not declared", at(":types"));
    if (sig->arity != 1) throw ParseError("type predicate " + t + " must be unary", at(":types"));
    if (!sig->is_static) throw ParseError("type predicate " + t + " appears in an effect", at(":types"));
  }
  for (const auto& f : m.static_facts)
    if (!m.is_static(f.predicate))
      throw ParseError("static fact uses fluent predicate " + f.predicate, at(":static"));
  for (const auto& s : m.schemas) {
    for (const auto& p : s.params) {
      bool typed = false;
      std::size_t count = 0;
      for (const auto& lit : s.pre_level1.literals) {
        if (!lit.positive || lit.atom.args.size() != 1 || lit.atom.args[0] != p.name) continue;
        bool is_type = m.type_predicates.empty() ? m.is_static(lit.atom.predicate)
                                                 : m.is_type_predicate(lit.atom.predicate);
        if (is_type) ++count;
      }
      typed = m.type_predicates.empty() ? count >= 1 : count == 1;
      if (!typed)
        throw ParseError("parameter " + p.name + " of " + s.name +
                             (count == 0 ? " has no type predicate" : " has several type predicates"),
                         at(s.name));
    }
  }
}

void print_formula_to(std::ostream& os, const Formula& f) {
  os << "(and";
  for (const auto& l : f.literals) os << " " << to_string(l);
  for (const auto& u : f.universals) os << " (forall (" << u.variable << ") " << to_string(u.literal) << ")";
  os << ")";
}

void print_params(std::ostream& os, const std::vector<Parameter>& ps) {
  os << "(";
  for (std::size_t i = 0; i < ps.size(); ++i) os << (i ? " " : "") << ps[i].name << " - " << ps[i].type;
  os << ")";
}

}  // namespace

std::string print_formula(const Formula& formula) {
  std::ostringstream os;
  print_formula_to(os, formula);
  return os.str();
}

std::string print_schema(const BehaviorSchema& s, std::string_view keyword) {
  std::ostringstream os;
  os << "(" << keyword << " " << s.name << "\n :parameters ";
  print_params(os, s.params);
  os << "\n :precondition ";
  print_formula_to(os, s.pre_level1);
  if (!s.pre_level2.empty()) {
    os << "\n :precondition-geometric ";
    print_formula_to(os, s.pre_level2);
  }
  os << "\n :effect ";
  print_formula_to(os, s.eff);
  os << "\n :body (then";
  for (const auto& p : s.body) os << "\n   " << to_string(p);
  os << "\n )\n)";
  return os.str();
}

DomainModel parse_domain(std::string_view text) {
  auto top = read_sexprs(text);
  if (top.size() != 1) {
    if (top.empty()) throw ParseError("empty domain file", SourcePos{});
    fail(top[1], "expected a single (define ...) form");
  }
  const SExpr& def = top[0];
  if (def.head() != "define") fail(def, "expected (define (domain NAME) ...)");
  if (def.items.size() < 2 || def.items[1].head() != "domain") fail(def, "missing (domain NAME)");

  DomainModel m;
  const auto& dn = def.items[1];
  if (dn.items.size() > 2) fail(dn, "domain name must be a single symbol");
  if (dn.items.size() == 2) m.name = symbol(dn.items[1], "domain name");

  std::map<std::string, SourcePos> where;
  std::vector<const SExpr*> actions, geometries;
  std::vector<const SExpr*> aliases, exclusions, reveals, statics, types;

  // Declarations first so that sections may appear in any order.
  for (std::size_t i = 2; i < def.items.size(); ++i) {
    const SExpr& sec = expect_list(def.items[i], "domain section");
    std::string h = sec.head();
    if (h == ":predicates") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        const auto& p = expect_list(sec.items[k], "predicate declaration");
        if (p.items.empty()) fail(p, "empty predicate declaration");
        std::string name = symbol(p.items[0], "predicate name");
        if (m.find_predicate(name)) fail(p, "duplicate predicate " + name);
        std::size_t arity = 0;
        for (std::size_t a = 1; a < p.items.size(); ++a) {
          if (p.items[a].is_symbol("-")) {
            ++a;
            continue;
          }
          if (!is_variable(symbol(p.items[a], "argument"))) fail(p.items[a], "expected variable");
          ++arity;
        }
        if (arity < 1 || arity > 2) fail(p, "predicate " + name + " must be unary or binary");
        m.predicates.push_back({name, arity, false});
      }
    } else if (h == ":types") {
      types.push_back(&sec);
    } else if (h == ":alias") {
      aliases.push_back(&sec);
    } else if (h == ":mutex" || h == ":oneof") {
      exclusions.push_back(&sec);
    } else if (h == ":reveal") {
      reveals.push_back(&sec);
    } else if (h == ":objects") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        if (sec.items[k].is_symbol("-")) {
          ++k;
          continue;
        }
        std::string o = symbol(sec.items[k], "object name");
        if (std::find(m.objects.begin(), m.objects.end(), o) != m.objects.end())
          fail(sec.items[k], "duplicate object " + o);
        m.objects.push_back(o);
      }
    } else if (h == ":static") {
      statics.push_back(&sec);
    } else if (h == ":action" || h == ":mechanism") {
      actions.push_back(&sec);
    } else if (h == ":geometry") {
      geometries.push_back(&sec);
    } else if (h == ":requirements") {
      continue;
    } else {
      fail(sec, "unknown domain section " + (h.empty() ? std::string("()") : h));
    }
  }

  for (const auto* sec : types) {
    where[":types"] = sec->pos;
    for (std::size_t k = 1; k < sec->items.size(); ++k) {
      std::string t = symbol(sec->items[k], "type predicate");
      if (!m.find_predicate(t)) fail(sec->items[k], "undeclared predicate " + t);
      if (!m.is_type_predicate(t)) m.type_predicates.push_back(t);
    }
  }
  for (const auto* sec : aliases) {
    if (sec->items.size() != 3) fail(*sec, "alias takes two names");
    std::string alias = symbol(sec->items[1], "alias");
    std::string canon = symbol(sec->items[2], "predicate");
    if (!m.find_predicate(canon)) fail(sec->items[2], "undeclared predicate " + canon);
    if (m.find_predicate(alias)) fail(sec->items[1], "alias " + alias + " is also declared as a predicate");
    m.aliases.emplace_back(alias, canon);
  }
  for (const auto* sec : exclusions) {
    ExclusionGroup g;
    g.exactly_one = sec->head() == ":oneof";
    for (std::size_t k = 1; k < sec->items.size(); ++k) {
      std::string p = m.canonical_predicate(symbol(sec->items[k], "predicate"));
      if (!m.find_predicate(p)) fail(sec->items[k], "undeclared predicate " + p);
      g.predicates.push_back(p);
    }
    if (g.predicates.size() < 2) fail(*sec, "exclusion group needs at least two predicates");
    m.exclusions.push_back(std::move(g));
  }

  Reader reader(m);
  for (const auto* sec : statics) {
    where[":static"] = sec->pos;
    TermScope ground;
    for (std::size_t k = 1; k < sec->items.size(); ++k) {
      Atom a = reader.atom(sec->items[k], ground);
      if (std::find(m.static_facts.begin(), m.static_facts.end(), a) == m.static_facts.end())
        m.static_facts.push_back(a);
    }
  }
  std::set<std::string> constants = known_constants(m);
  const std::set<std::string>* cs = constants.empty() ? nullptr : &constants;
  for (const auto* sec : reveals) {
    if (sec->items.size() != 3) fail(*sec, "reveal takes a condition literal and a placement atom");
    TermScope ground{nullptr, cs, {}};
    Literal cond = reader.literal(sec->items[1], ground);
    std::vector<Parameter> x{{"?x", "item"}};
    TermScope one{&x, cs, {}};
    Atom placement = reader.atom(sec->items[2], one);
    if (std::count(placement.args.begin(), placement.args.end(), "?x") != 1)
      fail(sec->items[2], "placement must mention ?x exactly once");
    m.reveals.push_back({cond, placement});
  }
  for (const auto* sec : actions) {
    BehaviorSchema s = reader.schema(*sec, cs);
    if (m.find_schema(s.name)) fail(*sec, "duplicate behavior " + s.name);
    where[s.name] = sec->pos;
    m.schemas.push_back(std::move(s));
  }
  for (const auto* sec : geometries) {
    Augmentation a = reader.augmentation(*sec, cs);
    if (!where.contains(a.behavior)) where[a.behavior] = sec->pos;
    m.pending_augmentations.push_back(std::move(a));
  }
  merge_pending(m, where);
  validate_impl(m, where);
  return m;
}

std::string print_domain(const DomainModel& m) {
  std::ostringstream os;
  os << "(define (domain" << (m.name.empty() ? "" : " " + m.name) << ")";
  if (!m.predicates.empty()) {
    os << "\n  (:predicates";
    for (const auto& p : m.predicates) {
      os << "\n    (" << p.name;
      for (std::size_t i = 0; i < p.arity; ++i) os << " ?" << static_cast<char>('x' + i) << " - item";
      os << ")";
    }
    os << ")";
  }
  if (!m.type_predicates.empty()) {
    os << "\n  (:types";
    for (const auto& t : m.type_predicates) os << " " << t;
    os << ")";
  }
  for (const auto& [alias, canon] : m.aliases) os << "\n  (:alias " << alias << " " << canon << ")";
  for (const auto& g : m.exclusions) {
    os << "\n  (" << (g.exactly_one ? ":oneof" : ":mutex");
    for (const auto& p : g.predicates) os << " " << p;
    os << ")";
  }
  for (const auto& r : m.reveals)
    os << "\n  (:reveal " << to_string(r.condition) << " " << to_string(r.placement) << ")";
  if (!m.objects.empty()) {
    os << "\n  (:objects";
    for (const auto& o : m.objects) os << " " << o;
    os << ")";
  }
  if (!m.static_facts.empty()) {
    os << "\n  (:static";
    for (const auto& f : m.static_facts) os << "\n    " << to_string(f);
    os << ")";
  }
  for (const auto& s : m.schemas) {
    std::string text = print_schema(s);
    std::string indented;
    for (char c : text) {
      indented.push_back(c);
      if (c == '\n') indented += "  ";
    }
    os << "\n\n  " << indented;
  }
  for (const auto& a : m.pending_augmentations) {
    os << "\n\n  (:geometry " << a.behavior << "\n   :parameters ";
    print_params(os, a.params);
    if (!a.pre_level2.empty()) {
      os << "\n   :precondition-geometric ";
      print_formula_to(os, a.pre_level2);
    }
    if (!a.eff.empty()) {
      os << "\n   :effect ";
      print_formula_to(os, a.eff);
    }
    os << ")";
  }
  os << "\n)\n";
  return os.str();
}

std::vector<BehaviorSchema> parse_schemas(std::string_view text, const DomainModel& context) {
  DomainModel m = context;
  Reader reader(m);
  std::set<std::string> constants = known_constants(m);
  std::vector<BehaviorSchema> out;
  std::map<std::string, SourcePos> where;
  for (const auto& e : read_sexprs(text)) {
    std::string h = e.head();
    if (h != ":action" && h != ":mechanism") fail(e, "expected (:action ...) or (:mechanism ...)");
    out.push_back(reader.schema(e, constants.empty() ? nullptr : &constants));
    where[out.back().name] = e.pos;
  }
  // Type checks need static flags computed with these schemas in view.
  DomainModel check = m;
  for (const auto& s : out) {
    if (check.find_schema(s.name)) throw ParseError("duplicate behavior " + s.name, where[s.name]);
    check.schemas.push_back(s);
  }
  check.pending_augmentations.clear();
  validate_impl(check, where);
  return out;
}

Formula parse_formula(std::string_view text, const DomainModel& model) {
  auto top = read_sexprs(text);
  if (top.size() != 1) throw ParseError("expected exactly one formula", top.empty() ? SourcePos{} : top[1].pos);
  std::set<std::string> constants = known_constants(model);
  TermScope scope{nullptr, constants.empty() ? nullptr : &constants, {}};
  return Reader(model).formula(top[0], scope, false);
}

std::vector<Literal> parse_literals(std::string_view text, const DomainModel& model) {
  std::set<std::string> constants = known_constants(model);
  TermScope scope{nullptr, constants.empty() ? nullptr : &constants, {}};
  Reader reader(model);
  Formula f;
  for (const auto& e : read_sexprs(text)) reader.formula_into(e, scope, false, f);
  return f.literals;
}

Problem parse_problem(std::string_view text, const DomainModel& model) {
  auto top = read_sexprs(text);
  if (top.size() != 1 || top[0].head() != "define") {
    if (top.empty()) throw ParseError("empty problem file", SourcePos{});
    fail(top[0], "expected (define (problem NAME) ...)");
  }
  const SExpr& def = top[0];
  Problem p;
  std::set<std::string> constants = known_constants(model);
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  for (std::size_t i = 1; i < def.items.size(); ++i) {
    const SExpr& sec = expect_list(def.items[i], "problem section");
    std::string h = sec.head();
    if (h == "problem") {
      if (sec.items.size() == 2) p.name = symbol(sec.items[1], "problem name");
    } else if (h == ":domain") {
      if (sec.items.size() == 2) p.domain = symbol(sec.items[1], "domain name");
    } else if (h == ":objects") {
      for (std::size_t k = 1; k < sec.items.size(); ++k) {
        if (sec.items[k].is_symbol("-")) {
          ++k;
          continue;
        }
        p.objects.push_back(symbol(sec.items[k], "object"));
        constants.insert(p.objects.back());
      }
    } else if (h == ":init") {
      init = &sec;
    } else if (h == ":goal") {
      goal = &sec;
    } else {
      fail(sec, "unknown problem section " + h);
    }
  }
  if (!p.domain.empty() && !model.name.empty() && p.domain != model.name)
    fail(def, "problem is for domain " + p.domain + ", not " + model.name);
  Reader reader(model);
  TermScope scope{nullptr, constants.empty() ? nullptr : &constants, {}};
  if (init) {
    for (std::size_t k = 1; k < init->items.size(); ++k) {
      Atom a = reader.atom(init->items[k], scope);
      auto& dst = model.is_static(a.predicate) ? p.static_init : p.init;
      if (std::find(dst.begin(), dst.end(), a) == dst.end()) dst.push_back(a);
    }
  }
  if (!goal || goal->items.size() != 2) fail(goal ? *goal : def, "problem needs one (:goal F)");
  p.goal = reader.formula(goal->items[1], scope, false);
  return p;
}

DomainModel assemble(const DomainModel& skeleton, std::vector<BehaviorSchema> schemas) {
  DomainModel m = skeleton;
  std::map<std::string, SourcePos> where;
  for (auto& s : schemas) {
    if (m.find_schema(s.name)) throw ParseError("duplicate behavior " + s.name, SourcePos{});
    m.schemas.push_back(std::move(s));
  }
  merge_pending(m, where);
  validate_impl(m, where);
  return m;
}

void validate(DomainModel& model) { validate_impl(model, {}); }

}  // namespace blade
