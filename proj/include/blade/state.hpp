#pragma once

// Three-valued assignments over ground atoms.

#include <map>
#include <string>
#include <vector>

#include "blade/model.hpp"

namespace blade {

enum class Truth { False, True, Unknown };

std::string_view to_string(Truth t);
Truth truth_of(bool b);
/// Kleene strong conjunction.
Truth kleene_and(Truth a, Truth b);
Truth kleene_not(Truth a);

/// Atoms absent from the map are unknown, or false once the state has been
/// projected to a closed world.
class AbstractState {
 public:
  Truth get(const Atom& atom) const;
  void set(const Atom& atom, Truth value);
  void set(const Atom& atom, bool value) { set(atom, truth_of(value)); }
  void apply(const Literal& lit) { set(lit.atom, lit.positive); }

  bool closed_world() const { return closed_world_; }
  void close_world();

  /// Atoms with a definite value.
  const std::map<Atom, bool>& known() const { return values_; }
  std::vector<Atom> true_atoms() const;

  bool operator==(const AbstractState&) const = default;

 private:
  std::map<Atom, bool> values_;
  bool closed_world_ = false;
};

std::string to_string(const AbstractState& state);

}  // namespace blade
