// Shipped domains and the initial-state samplers of their tasks.

#include <functional>
#include <memory>
#include <mutex>

#include "blade/dialect.hpp"
#include "blade/resources.hpp"
#include "blade/worldsim.hpp"

namespace blade {

namespace {

const std::map<std::string, std::string> kFiles{
    {"calvin", "calvin.bdl"}, {"boil-water", "boil-water.bdl"}, {"make-tea", "make-tea.bdl"}};

using Rng = std::mt19937_64;

Atom at(std::string p, std::vector<std::string> args) { return {std::move(p), std::move(args)}; }

bool coin(Rng& rng) { return std::bernoulli_distribution(0.5)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

// Sampler output: the true atoms plus compartments for hidden objects.
struct Draft {
  std::vector<Atom> atoms;
  std::map<std::string, std::size_t> compartment;
};

WorldState build(const World& w, const Draft& d) {
  WorldState s = make_state(w, d.atoms);
  for (const auto& [obj, r] : d.compartment) s.compartment[obj] = r;
  auto bad = consistency_violations(w, s);
  if (!bad.empty()) throw std::logic_error("sampler produced an inconsistent state: " + bad.front());
  return s;
}

// CALVIN ----------------------------------------------------------------

const std::vector<std::string> kBlocks{"red-block", "blue-block", "pink-block"};
constexpr std::size_t kRevealDrawer = 0, kRevealSliderRight = 1, kRevealSliderLeft = 2;

struct Calvin {
  bool drawer_open = false;
  bool slider_left = false;
  bool led_on = false;
  bool bulb_on = false;
  Draft d;

  void finish() {
    d.atoms.push_back(at(drawer_open ? "is-open" : "is-close", {"drawer"}));
    d.atoms.push_back(at(slider_left ? "is-slider-left" : "is-slider-right", {"slider"}));
    d.atoms.push_back(at(led_on ? "is-turned-on" : "is-turned-off", {"led"}));
    d.atoms.push_back(at(bulb_on ? "is-turned-on" : "is-turned-off", {"lightbulb"}));
  }
  // The compartment the sliding door currently leaves open or covers.
  std::size_t exposed() const { return slider_left ? kRevealSliderLeft : kRevealSliderRight; }
  std::size_t covered() const { return slider_left ? kRevealSliderRight : kRevealSliderLeft; }

  void on_table(const std::string& b) { d.atoms.push_back(at("is-on", {b, "table"})); }
  void in_drawer(const std::string& b) {
    d.atoms.push_back(at("is-in", {b, "drawer"}));
    d.compartment[b] = kRevealDrawer;
  }
  void in_slider(const std::string& b, std::size_t compartment) {
    d.atoms.push_back(at("is-in", {b, "slider"}));
    d.compartment[b] = compartment;
  }
  // Somewhere visible that is not the drawer.
  void visible_outside_drawer(Rng& rng, const std::string& b) {
    if (std::bernoulli_distribution(0.25)(rng))
      in_slider(b, exposed());
    else
      on_table(b);
  }
};

Calvin calvin_base(Rng& rng) {
  Calvin c;
  c.drawer_open = coin(rng);
  c.slider_left = coin(rng);
  c.led_on = coin(rng);
  c.bulb_on = coin(rng);
  return c;
}

WorldState calvin_sampler(const World& w, const std::string& id, Rng& rng) {
  Calvin c = calvin_base(rng);
  auto target_of = [&](const std::string& prefix) {
    if (id == prefix) return std::string("red-block");
    return id.substr(prefix.size() + 1) + "-block";
  };
  if (id == "task-1") {
    c.led_on = c.bulb_on = true;
    for (const auto& b : kBlocks) {
      if (c.drawer_open && std::bernoulli_distribution(0.2)(rng))
        c.in_drawer(b);
      else
        c.visible_outside_drawer(rng, b);
    }
  } else if (id == "task-2") {
    c.drawer_open = false;
    for (const auto& b : kBlocks) c.on_table(b);
  } else if (id == "task-3") {
    c.drawer_open = true;
    for (const auto& b : kBlocks) c.visible_outside_drawer(rng, b);
  } else if (id.rfind("task-4", 0) == 0) {
    std::string target = target_of("task-4");
    c.drawer_open = false;
    for (const auto& b : kBlocks) {
      if (b == target)
        c.in_drawer(b);
      else
        c.visible_outside_drawer(rng, b);
    }
  } else if (id.rfind("task-5", 0) == 0) {
    std::string target = target_of("task-5");
    c.drawer_open = true;
    for (const auto& b : kBlocks) {
      if (b == target)
        c.in_slider(b, c.covered());
      else
        c.on_table(b);
    }
  } else if (id == "task-6" || id == "task-6-right") {
    bool to_left = id == "task-6";
    c.slider_left = !to_left;
    std::string path = to_left ? "slider-path-left" : "slider-path-right";
    for (const auto& b : kBlocks) {
      c.on_table(b);
      if (b == "pink-block") c.d.atoms.push_back(at("is-blocking", {b, path}));
    }
  } else if (id == "demo") {
    for (const auto& b : kBlocks) {
      double u = std::uniform_real_distribution<double>(0, 1)(rng);
      if (u < 0.55)
        c.on_table(b);
      else if (u < 0.75)
        c.in_drawer(b);
      else
        c.in_slider(b, coin(rng) ? c.exposed() : c.covered());
    }
  } else {
    throw std::invalid_argument("unknown calvin sampler " + id);
  }
  c.finish();
  return build(w, c.d);
}

// Boil Water ------------------------------------------------------------

WorldState boil_water_sampler(const World& w, const std::string& id, Rng& rng) {
  Draft d;
  auto head_away = [&](bool away) {
    d.atoms.push_back(away ? at("is-turned-away", {"faucet-head"}) : at("is-aligned", {"faucet-head", "sink"}));
  };
  if (id == "task-1") {
    d.atoms.push_back(at("is-placed-in", {"kettle", "sink"}));
    d.atoms.push_back(at("is-turned-off", {"faucet-knob"}));
    head_away(true);
    d.atoms.push_back(coin(rng) ? at("is-placed-on", {"pot", "table"}) : at("is-placed-in", {"pot", "sink"}));
  } else if (id == "task-2" || id == "task-3") {
    d.atoms.push_back(at("is-placed-in", {"kettle", "sink"}));
    d.atoms.push_back(at("is-turned-off", {"faucet-knob"}));
    head_away(id == "task-2" || coin(rng));
    d.atoms.push_back(at("is-placed-on", {"pot", "stove"}));
    d.atoms.push_back(at("is-blocked", {"stove"}));
  } else if (id == "demo") {
    bool stove_taken = false;
    for (std::string v : {"kettle", "pot"}) {
      int where = std::uniform_int_distribution<int>(0, 2)(rng);
      if (where == 2 && stove_taken) where = 1;
      if (where == 0) d.atoms.push_back(at("is-placed-in", {v, "sink"}));
      if (where == 1) d.atoms.push_back(at("is-placed-on", {v, "table"}));
      if (where == 2) {
        d.atoms.push_back(at("is-placed-on", {v, "stove"}));
        d.atoms.push_back(at("is-blocked", {"stove"}));
        stove_taken = true;
      }
    }
    head_away(coin(rng));
    d.atoms.push_back(at("is-turned-off", {"faucet-knob"}));
  } else {
    throw std::invalid_argument("unknown boil-water sampler " + id);
  }
  return build(w, d);
}

// Make Tea --------------------------------------------------------------

constexpr std::size_t kRevealLeftCabinet = 0, kRevealRightCabinet = 1, kRevealTeaDrawer = 2;

WorldState make_tea_sampler(const World& w, const std::string& id, Rng& rng) {
  Draft d;
  bool left = coin(rng);
  std::string cabinet = left ? "left-cabinet" : "right-cabinet";
  auto kettle_in_cabinet = [&] {
    d.atoms.push_back(at("is-placed-inside", {"kettle", cabinet}));
    d.compartment["kettle"] = left ? kRevealLeftCabinet : kRevealRightCabinet;
  };
  auto teabag_in_drawer = [&] {
    d.atoms.push_back(at("is-placed-inside", {"teabag", "drawer"}));
    d.compartment["teabag"] = kRevealTeaDrawer;
  };
  auto doors = [&](bool open) {
    if (!open) return;
    d.atoms.push_back(at("is-cabinet-door-open", {"left-door"}));
    d.atoms.push_back(at("is-cabinet-door-open", {"right-door"}));
  };
  if (id == "task-4" || id == "task-5") {
    kettle_in_cabinet();
    doors(true);
    teabag_in_drawer();
  } else if (id == "task-6") {
    kettle_in_cabinet();
    doors(false);
    d.atoms.push_back(at("is-blocking", {"teapot", "left-door"}));
    d.atoms.push_back(at("is-blocking", {"teapot", "right-door"}));
    teabag_in_drawer();
    d.atoms.push_back(at("is-drawer-open", {"drawer"}));
  } else if (id == "task-7") {
    kettle_in_cabinet();
    doors(false);
    teabag_in_drawer();
    if (coin(rng)) d.atoms.push_back(at("is-drawer-open", {"drawer"}));
  } else if (id == "demo") {
    if (coin(rng))
      kettle_in_cabinet();
    else
      d.atoms.push_back(at("is-placed-on", {"kettle", coin(rng) ? "table" : "stove"}));
    if (coin(rng)) d.atoms.push_back(at("is-cabinet-door-open", {"left-door"}));
    if (coin(rng)) d.atoms.push_back(at("is-cabinet-door-open", {"right-door"}));
    teabag_in_drawer();
    if (coin(rng)) d.atoms.push_back(at("is-drawer-open", {"drawer"}));
  } else {
    throw std::invalid_argument("unknown make-tea sampler " + id);
  }
  return build(w, d);
}

using Sampler = std::function<WorldState(const World&, const std::string&, Rng&)>;

const std::map<std::string, std::pair<Sampler, std::vector<std::string>>>& samplers() {
  static const std::map<std::string, std::pair<Sampler, std::vector<std::string>>> table{
      {"calvin",
       {calvin_sampler,
        {"task-1", "task-2", "task-3", "task-4", "task-4-blue", "task-4-pink", "task-5", "task-5-blue",
         "task-5-pink", "task-6", "task-6-right", "demo"}}},
      {"boil-water", {boil_water_sampler, {"task-1", "task-2", "task-3", "demo"}}},
      {"make-tea", {make_tea_sampler, {"task-4", "task-5", "task-6", "task-7", "demo"}}}};
  return table;
}

}  // namespace

const World& builtin_world(const std::string& domain_id) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<World>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(domain_id);
  if (it != cache.end()) return *it->second;
  auto f = kFiles.find(domain_id);
  if (f == kFiles.end()) throw std::invalid_argument("unknown domain " + domain_id);
  auto text = embedded_file(f->second);
  if (!text) throw std::logic_error("missing embedded file " + f->second);
  auto w = std::make_unique<World>(parse_domain(*text), domain_id);
  return *cache.emplace(domain_id, std::move(w)).first->second;
}

std::vector<std::string> builtin_domains() {
  std::vector<std::string> out;
  for (const auto& [k, _] : kFiles) out.push_back(k);
  return out;
}

std::vector<std::string> sampler_ids(const std::string& domain_id) {
  auto it = samplers().find(domain_id);
  if (it == samplers().end()) throw std::invalid_argument("unknown domain " + domain_id);
  return it->second.second;
}

WorldState init_domain(const std::string& domain_id, const std::string& sampler_id, std::uint64_t seed) {
  auto it = samplers().find(domain_id);
  if (it == samplers().end()) throw std::invalid_argument("unknown domain " + domain_id);
  const auto& ids = it->second.second;
  if (std::find(ids.begin(), ids.end(), sampler_id) == ids.end())
    throw std::invalid_argument("unknown sampler " + sampler_id + " for " + domain_id);
  Rng rng(seed);
  return it->second.first(builtin_world(domain_id), sampler_id, rng);
}

}  // namespace blade
