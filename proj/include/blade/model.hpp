#pragma once

// Domain-model types for behaviors: lifted schemas with two-level
// preconditions, effects and a contact-primitive body, plus grounding.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blade {

/// Lowercase, '_' -> '-'. Idempotent.
std::string normalize_identifier(std::string_view id);

inline bool is_variable(std::string_view term) { return !term.empty() && term.front() == '?'; }

struct Atom {
  std::string predicate;
  std::vector<std::string> args;  // variables ("?x") or constants

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;

  bool is_ground() const;
  bool mentions(std::string_view term) const;
};

std::string to_string(const Atom& atom);

struct Literal {
  Atom atom;
  bool positive = true;

  auto operator<=>(const Literal&) const = default;
  bool operator==(const Literal&) const = default;

  Literal negated() const { return {atom, !positive}; }
};

std::string to_string(const Literal& lit);

/// `(forall (?v) LIT)`; only allowed among geometric preconditions, expanded
/// over every domain object at grounding.
struct Universal {
  std::string variable;
  Literal literal;

  bool operator==(const Universal&) const = default;
};

/// Conjunction of literals. Duplicates are collapsed and p & not p is rejected
/// when formulas are built through add().
struct Formula {
  std::vector<Literal> literals;
  std::vector<Universal> universals;

  bool operator==(const Formula&) const = default;
  bool empty() const { return literals.empty() && universals.empty(); }
  std::size_t size() const { return literals.size() + universals.size(); }

  /// Returns false if `lit` contradicts an existing literal (nothing added).
  bool add(const Literal& lit);
  bool contains(const Literal& lit) const;
};

enum class PrimitiveKind { Open, Close, MoveTo, Grasp, Place, Move, Push };

std::string_view to_string(PrimitiveKind kind);
std::optional<PrimitiveKind> primitive_kind_from(std::string_view name);
std::size_t primitive_arity(PrimitiveKind kind);
/// grasp/place/close/open change the gripper; the rest are motions between them.
bool is_gripper_event(PrimitiveKind kind);

struct ContactPrimitive {
  PrimitiveKind kind = PrimitiveKind::MoveTo;
  // Always primitive_arity(kind) entries; nullopt marks an unspecified argument.
  std::vector<std::optional<std::string>> args;

  bool operator==(const ContactPrimitive&) const = default;

  static ContactPrimitive make(PrimitiveKind kind, std::vector<std::optional<std::string>> args = {});
};

std::string to_string(const ContactPrimitive& prim);

struct Parameter {
  std::string name;
  std::string type = "item";

  bool operator==(const Parameter&) const = default;
};

struct PredicateSignature {
  std::string name;
  std::size_t arity = 1;
  bool is_static = false;

  bool operator==(const PredicateSignature&) const = default;
};

struct BehaviorSchema {
  std::string name;
  std::vector<Parameter> params;
  Formula pre_level1;  // semantic preconditions, used during search
  Formula pre_level2;  // geometric / visibility preconditions, checked right before execution
  Formula eff;
  std::vector<ContactPrimitive> body;

  bool operator==(const BehaviorSchema&) const = default;

  bool has_param(std::string_view var) const;
};

/// Once `condition` becomes true through a behavior's effect, a hidden object
/// is optimistically assumed to satisfy `placement` (whose single variable
/// stands for the object). The simulator uses the same rules to hide objects.
struct RevealRule {
  Literal condition;
  Atom placement;

  bool operator==(const RevealRule&) const = default;
};

/// Predicates whose atoms share a subject (first argument). At most one is
/// true per subject; with `exactly_one`, exactly one.
struct ExclusionGroup {
  std::vector<std::string> predicates;
  bool exactly_one = false;

  bool operator==(const ExclusionGroup&) const = default;
};

/// Extra geometric preconditions and effects attached to a behavior by name;
/// parameters are matched to the behavior's by position.
struct Augmentation {
  std::string behavior;
  std::vector<Parameter> params;
  Formula pre_level2;
  Formula eff;

  bool operator==(const Augmentation&) const = default;
};

struct DomainModel {
  std::string name;
  std::vector<std::string> type_predicates;
  std::vector<PredicateSignature> predicates;
  std::vector<std::pair<std::string, std::string>> aliases;  // alias -> canonical
  std::vector<ExclusionGroup> exclusions;
  std::vector<RevealRule> reveals;
  std::vector<std::string> objects;
  std::vector<Atom> static_facts;
  std::vector<BehaviorSchema> schemas;
  std::vector<Augmentation> pending_augmentations;

  bool operator==(const DomainModel&) const = default;

  const BehaviorSchema* find_schema(std::string_view name) const;
  const PredicateSignature* find_predicate(std::string_view name) const;
  bool is_static(std::string_view predicate) const;
  bool is_type_predicate(std::string_view predicate) const;
  /// Resolves an alias to its canonical predicate name (identity otherwise).
  std::string canonical_predicate(std::string_view name) const;
  /// The positive static unary literal constraining `var` in pre_level1, if unique.
  std::optional<std::string> param_type(const BehaviorSchema& schema, std::string_view var) const;
};

/// Recomputes PredicateSignature::is_static from schema effects.
void refresh_static_flags(DomainModel& model);

/// Predicates some schema reads in its semantic precondition.
std::set<std::string> level1_predicates(const DomainModel& model);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GroundingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constants together with the static facts that hold for them.
struct ObjectSet {
  std::vector<std::string> names;  // sorted, unique
  std::set<Atom> static_facts;

  bool holds(const Atom& fact) const { return static_facts.contains(fact); }
  bool contains(std::string_view name) const;
  void add(std::string name);
};

ObjectSet objects_of(const DomainModel& model);

using Binding = std::map<std::string, std::string>;

struct GroundBehavior {
  std::string name;
  std::vector<std::string> args;  // in parameter order
  // Static literals are checked at grounding and dropped; universals expanded.
  Formula pre_level1;
  Formula pre_level2;
  Formula eff;
  std::vector<ContactPrimitive> body;

  bool operator==(const GroundBehavior& other) const {
    return name == other.name && args == other.args;
  }
  Binding binding(const BehaviorSchema& schema) const;
};

/// "(name a b)"
std::string to_string(const GroundBehavior& behavior);

Atom substitute(const Atom& atom, const Binding& binding);
Literal substitute(const Literal& lit, const Binding& binding);
Formula substitute(const Formula& formula, const Binding& binding);

GroundBehavior ground_schema(const DomainModel& model, const BehaviorSchema& schema,
                             const Binding& binding, const ObjectSet& objects);

/// Every binding that satisfies the schema's static literals and the
/// distinct-binding rule, in lexicographic order of argument tuples.
std::vector<GroundBehavior> instantiate_all(const DomainModel& model, const ObjectSet& objects);
std::vector<GroundBehavior> instantiate_schema(const DomainModel& model, const BehaviorSchema& schema,
                                               const ObjectSet& objects);

}  // namespace blade
