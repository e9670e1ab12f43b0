#pragma once

// Reader/printer for the behavior-model dialect: PDDL-like domains whose
// actions carry a geometric precondition block and a contact-primitive body.

#include <string>
#include <string_view>
#include <vector>

#include "blade/model.hpp"
#include "blade/sexpr.hpp"

namespace blade {

DomainModel parse_domain(std::string_view text);
std::string print_domain(const DomainModel& model);

/// Parses `(:action ...)` / `(:mechanism ...)` forms against the declarations
/// of `context`. Static flags are recomputed with the new schemas in view.
std::vector<BehaviorSchema> parse_schemas(std::string_view text, const DomainModel& context);
std::string print_schema(const BehaviorSchema& schema, std::string_view keyword = ":action");

/// Ground conjunction, e.g. a goal: "(and (is-off led) (not (is-open drawer)))".
Formula parse_formula(std::string_view text, const DomainModel& model);
/// Sequence of literals without a wrapping `and`, e.g. perturbation deltas.
std::vector<Literal> parse_literals(std::string_view text, const DomainModel& model);
std::string print_formula(const Formula& formula);

struct Problem {
  std::string name;
  std::string domain;
  std::vector<std::string> objects;
  std::vector<Atom> init;  // fluent atoms true initially; others false
  std::vector<Atom> static_init;
  Formula goal;
};

Problem parse_problem(std::string_view text, const DomainModel& model);

/// Adds `schemas` to a skeleton, merging pending geometric augmentations into
/// the matching schemas and re-validating. Throws ParseError on invalid results.
DomainModel assemble(const DomainModel& skeleton, std::vector<BehaviorSchema> schemas);

/// Parse followed by the checks a model must pass before grounding.
void validate(DomainModel& model);

}  // namespace blade
