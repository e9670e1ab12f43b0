#include "blade/state.hpp"

namespace blade {

std::string_view to_string(Truth t) {
  switch (t) {
    case Truth::False:
      return "false";
    case Truth::True:
      return "true";
    default:
      return "unknown";
  }
}

Truth truth_of(bool b) { return b ? Truth::True : Truth::False; }

Truth kleene_and(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::Unknown || b == Truth::Unknown) return Truth::Unknown;
  return Truth::True;
}

Truth kleene_not(Truth a) {
  if (a == Truth::Unknown) return a;
  return a == Truth::True ? Truth::False : Truth::True;
}

Truth AbstractState::get(const Atom& atom) const {
  auto it = values_.find(atom);
  if (it == values_.end()) return closed_world_ ? Truth::False : Truth::Unknown;
  return truth_of(it->second);
}

void AbstractState::set(const Atom& atom, Truth value) {
  if (value == Truth::Unknown) {
    values_.erase(atom);
  } else {
    values_[atom] = value == Truth::True;
  }
}

void AbstractState::close_world() {
  closed_world_ = true;
  std::erase_if(values_, [](const auto& kv) { return !kv.second; });
}

std::vector<Atom> AbstractState::true_atoms() const {
  std::vector<Atom> out;
  for (const auto& [a, v] : values_)
    if (v) out.push_back(a);
  return out;
}

std::string to_string(const AbstractState& state) {
  std::string out = "{";
  bool first = true;
  for (const auto& [a, v] : state.known()) {
    if (!first) out += " ";
    first = false;
    out += v ? to_string(a) : "(not " + to_string(a) + ")";
  }
  return out + "}";
}

}  // namespace blade
