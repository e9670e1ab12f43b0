#include "blade/trace.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace blade {

using nlohmann::json;

namespace {

std::optional<std::string> opt_string(const json& j, const char* key, std::size_t line) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw TraceError(std::string(key) + " must be a string or null", line);
  std::string s = v.get<std::string>();
  if (s.empty()) return std::nullopt;
  return normalize_identifier(s);
}

TraceRecord parse_record(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw TraceError(std::string("invalid JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw TraceError("record must be an object", line);
  static const std::set<std::string> fields{"t", "gripper_width", "held", "contact", "support"};
  for (const auto& [k, v] : j.items())
    if (!fields.contains(k)) throw TraceError("unexpected field " + k, line);
  for (const auto& f : fields)
    if (!j.contains(f)) throw TraceError("missing field " + f, line);
  if (!j["t"].is_number_integer() || j["t"].get<long long>() < 0)
    throw TraceError("t must be a non-negative integer", line);
  if (!j["gripper_width"].is_number()) throw TraceError("gripper_width must be a number", line);
  TraceRecord r;
  r.t = j["t"].get<std::size_t>();
  r.gripper_width = j["gripper_width"].get<double>();
  if (r.gripper_width < 0.0 || r.gripper_width > 1.0)
    throw TraceError("gripper_width " + j["gripper_width"].dump() + " outside [0, 1]", line);
  r.held = opt_string(j, "held", line);
  r.contact = opt_string(j, "contact", line);
  r.support = opt_string(j, "support", line);
  if (r.held && r.gripper_width >= 1.0) throw TraceError("held object with a fully open gripper", line);
  return r;
}

std::vector<AnnotationSpan> parse_spans(const json& doc) {
  if (!doc.is_object() || !doc.contains("segments") || !doc["segments"].is_array())
    throw TraceError("annotation document needs a \"segments\" array", 0);
  std::vector<AnnotationSpan> out;
  for (const auto& s : doc["segments"]) {
    if (!s.is_object() || !s.contains("start") || !s.contains("end") || !s.contains("label"))
      throw TraceError("annotation segment needs start, end and label", 0);
    out.push_back({s["start"].get<std::size_t>(), s["end"].get<std::size_t>(), s["label"].get<std::string>()});
  }
  return out;
}

json opt_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

void validate_trajectory(const DemoTrajectory& demo) {
  for (std::size_t i = 0; i < demo.records.size(); ++i) {
    const auto& r = demo.records[i];
    if (r.gripper_width < 0.0 || r.gripper_width > 1.0) throw TraceError("gripper_width outside [0, 1]", i);
    if (r.held && r.gripper_width >= 1.0) throw TraceError("held object with a fully open gripper", i);
    if (i > 0 && r.t <= demo.records[i - 1].t) throw TraceError("steps are not increasing", i);
  }
  std::vector<AnnotationSpan> spans = demo.annotations;
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::size_t last_t = demo.records.empty() ? 0 : demo.records.back().t;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].start > spans[i].end) throw TraceError("annotation " + spans[i].label + " ends before it starts", i);
    if (demo.records.empty() || spans[i].end > last_t || spans[i].start < demo.records.front().t)
      throw TraceError("annotation " + spans[i].label + " outside the trace", i);
    if (i > 0 && spans[i].start <= spans[i - 1].end)
      throw TraceError("annotations " + spans[i - 1].label + " and " + spans[i].label + " overlap", i);
  }
}

std::vector<DemoTrajectory> load_traces(std::string_view records, std::optional<std::string_view> annotations) {
  std::vector<DemoTrajectory> demos(1);
  std::size_t line_no = 0;
  std::istringstream in{std::string(records)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::string trimmed = line.substr(first);
    trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
    if (trimmed == "---") {
      demos.emplace_back();
      continue;
    }
    TraceRecord r = parse_record(trimmed, line_no);
    auto& recs = demos.back().records;
    if (!recs.empty() && r.t <= recs.back().t)
      throw TraceError("non-monotone step " + std::to_string(r.t) + " after " + std::to_string(recs.back().t),
                       line_no);
    recs.push_back(std::move(r));
  }
  std::erase_if(demos, [](const DemoTrajectory& d) { return d.records.empty(); });

  if (annotations) {
    json doc;
    try {
      doc = json::parse(*annotations);
    } catch (const json::parse_error& e) {
      throw TraceError(std::string("invalid annotation JSON: ") + e.what(), 0);
    }
    std::vector<json> per_demo;
    if (doc.is_array()) {
      per_demo.assign(doc.begin(), doc.end());
    } else {
      per_demo.push_back(doc);
    }
    if (per_demo.size() != demos.size())
      throw TraceError("annotation documents (" + std::to_string(per_demo.size()) + ") do not match episodes (" +
                           std::to_string(demos.size()) + ")",
                       0);
    for (std::size_t i = 0; i < demos.size(); ++i) demos[i].annotations = parse_spans(per_demo[i]);
  }
  for (const auto& d : demos) validate_trajectory(d);
  return demos;
}

std::string write_traces(const std::vector<DemoTrajectory>& demos) {
  std::ostringstream os;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (i) os << "---\n";
    for (const auto& r : demos[i].records) {
      json j{{"t", r.t},
             {"gripper_width", r.gripper_width},
             {"held", opt_json(r.held)},
             {"contact", opt_json(r.contact)},
             {"support", opt_json(r.support)}};
      os << j.dump() << "\n";
    }
  }
  return os.str();
}

std::string write_annotations(const std::vector<DemoTrajectory>& demos) {
  json arr = json::array();
  for (const auto& d : demos) {
    json segs = json::array();
    for (const auto& a : d.annotations) segs.push_back({{"start", a.start}, {"end", a.end}, {"label", a.label}});
    arr.push_back({{"segments", segs}});
  }
  return arr.dump(1) + "\n";
}

namespace {

enum class Grip { Open, Closed };

struct Event {
  std::size_t first, last;  // record indices of the transition, arrival inclusive
  Grip to;
};

}  // namespace

std::vector<PrimitiveSegment> segment_trace(const DemoTrajectory& demo, const SegmentationConfig& cfg) {
  const auto& rs = demo.records;
  std::vector<PrimitiveSegment> out;
  if (rs.empty()) return out;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i].held && rs[i].gripper_width >= cfg.open_min)
      throw SegmentationError("held object " + *rs[i].held + " while the gripper is fully open", rs[i].t);

  // Hysteresis state machine over the width signal.
  std::vector<Event> events;
  Grip state = rs[0].gripper_width <= cfg.closed_max ? Grip::Closed : Grip::Open;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t leaving = kNone;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    double w = rs[i].gripper_width;
    if (state == Grip::Open) {
      if (leaving == kNone && w < cfg.open_min - cfg.hysteresis) leaving = i;
      if (leaving != kNone && w >= cfg.open_min) leaving = kNone;
      if (leaving != kNone && w <= cfg.closed_max) {
        events.push_back({leaving, i, Grip::Closed});
        state = Grip::Closed;
        leaving = kNone;
      }
    } else {
      if (leaving == kNone && w > cfg.closed_max + cfg.hysteresis) leaving = i;
      if (leaving != kNone && w <= cfg.closed_max) leaving = kNone;
      if (leaving != kNone && w >= cfg.open_min) {
        events.push_back({leaving, i, Grip::Open});
        state = Grip::Open;
        leaving = kNone;
      }
    }
  }

  auto first_contact = [&](std::size_t a, std::size_t b) -> std::optional<std::string> {
    for (std::size_t k = a; k <= b && k < rs.size(); ++k)
      if (rs[k].contact) return rs[k].contact;
    return std::nullopt;
  };

  // Object the gripper heads for at event e.
  auto event_object = [&](std::size_t e) -> std::optional<std::string> {
    const auto& ev = events[e];
    const auto& arrive = rs[ev.last];
    if (ev.to == Grip::Closed) {
      if (arrive.held) return arrive.held;
      if (arrive.contact) return arrive.contact;
      std::size_t next_first = e + 1 < events.size() ? events[e + 1].first : rs.size();
      if (ev.last + 1 < next_first) return first_contact(ev.last + 1, next_first - 1);
      return std::nullopt;
    }
    return std::nullopt;
  };

  auto span = [&](std::size_t a, std::size_t b, Grip g, std::optional<std::size_t> next_event) {
    if (a > b) return;
    ContactPrimitive p;
    if (g == Grip::Open) {
      p = ContactPrimitive::make(PrimitiveKind::MoveTo, {next_event ? event_object(*next_event) : std::nullopt});
    } else if (rs[a].held) {
      p = ContactPrimitive::make(PrimitiveKind::Move, {rs[a].held});
    } else {
      p = ContactPrimitive::make(PrimitiveKind::Push, {first_contact(a, b)});
    }
    out.push_back({p, rs[a].t, rs[b].t});
  };

  Grip g = rs[0].gripper_width <= cfg.closed_max ? Grip::Closed : Grip::Open;
  std::size_t cursor = 0;
  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto& ev = events[e];
    if (ev.first > 0) span(cursor, ev.first - 1, g, e);
    const auto& arrive = rs[ev.last];
    ContactPrimitive p;
    if (ev.to == Grip::Closed) {
      if (arrive.held) {
        p = ContactPrimitive::make(PrimitiveKind::Grasp, {arrive.held, arrive.support});
      } else {
        p = ContactPrimitive::make(PrimitiveKind::Close);
      }
    } else {
      std::optional<std::string> was_held = ev.first > 0 ? rs[ev.first - 1].held : std::nullopt;
      if (was_held) {
        std::optional<std::string> support = arrive.support;
        for (std::size_t k = ev.first; !support && k <= ev.last; ++k) support = rs[k].support;
        p = ContactPrimitive::make(PrimitiveKind::Place, {was_held, support});
      } else {
        p = ContactPrimitive::make(PrimitiveKind::Open);
      }
    }
    out.push_back({p, rs[ev.first].t, rs[ev.last].t});
    cursor = ev.last + 1;
    g = ev.to;
  }
  if (cursor < rs.size()) span(cursor, rs.size() - 1, g, std::nullopt);
  return out;
}

namespace {

bool unify(const std::optional<std::string>& pattern, const std::optional<std::string>& value, Binding& b) {
  if (!pattern || !value) return true;  // unspecified on either side
  if (!is_variable(*pattern)) return *pattern == *value;
  auto it = b.find(*pattern);
  if (it == b.end()) {
    b[*pattern] = *value;
    return true;
  }
  return it->second == *value;
}

bool type_consistent(const DomainModel& model, const BehaviorSchema& s, const Binding& b, const ObjectSet& objs) {
  if (objs.names.empty()) return true;
  for (const auto& lit : s.pre_level1.literals) {
    if (!model.is_static(lit.atom.predicate)) continue;
    Atom a = substitute(lit.atom, b);
    if (!a.is_ground()) continue;
    if (objs.holds(a) != lit.positive) return false;
  }
  // The distinct-binding rule also constrains matches.
  for (std::size_t i = 0; i < s.params.size(); ++i)
    for (std::size_t k = 0; k < i; ++k) {
      auto bi = b.find(s.params[i].name), bk = b.find(s.params[k].name);
      if (bi == b.end() || bk == b.end() || bi->second != bk->second) continue;
      auto ti = model.param_type(s, s.params[i].name), tk = model.param_type(s, s.params[k].name);
      if (ti && ti == tk) return false;
    }
  return true;
}

void complete_binding(const DomainModel& model, const BehaviorSchema& s, Binding& b, const ObjectSet& objs) {
  for (const auto& p : s.params) {
    if (b.contains(p.name)) continue;
    std::optional<std::string> unique;
    bool ambiguous = false;
    for (const auto& o : objs.names) {
      Binding trial = b;
      trial[p.name] = o;
      bool ok = true;
      for (const auto& lit : s.pre_level1.literals) {
        if (!model.is_static(lit.atom.predicate) || !lit.atom.mentions(p.name)) continue;
        Atom a = substitute(lit.atom, trial);
        if (a.is_ground() && objs.holds(a) != lit.positive) ok = false;
      }
      if (!ok || !type_consistent(model, s, trial, objs)) continue;
      if (unique) ambiguous = true;
      unique = o;
    }
    if (unique && !ambiguous) b[p.name] = *unique;
  }
}

}  // namespace

std::vector<BehaviorSegment> resegment(const std::vector<PrimitiveSegment>& segments, const DemoTrajectory& demo,
                                       const DomainModel& model) {
  std::vector<BehaviorSegment> out;
  std::vector<bool> claimed(segments.size(), false);
  ObjectSet objs = objects_of(model);

  std::vector<std::size_t> order(demo.annotations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return demo.annotations[a].start < demo.annotations[b].start; });

  for (std::size_t ai : order) {
    const auto& ann = demo.annotations[ai];
    BehaviorSegment bs;
    bs.behavior_name = normalize_identifier(ann.label);
    bs.annotation = ai;
    bs.start = ann.start;
    bs.end = ann.end;
    const BehaviorSchema* schema = model.find_schema(bs.behavior_name);
    if (!schema) {
      bs.valid = false;
      bs.error = "no behavior named " + bs.behavior_name;
      out.push_back(std::move(bs));
      continue;
    }
    if (schema->body.empty()) {
      bs.valid = false;
      bs.error = "behavior has an empty body";
      out.push_back(std::move(bs));
      continue;
    }
    // Candidates: primitives overlapping the span, widened by one on each side.
    std::optional<std::size_t> lo, hi;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].end < ann.start || segments[i].start > ann.end) continue;
      if (!lo) lo = i;
      hi = i;
    }
    if (!lo) {
      bs.valid = false;
      bs.error = "no primitives inside the span";
      out.push_back(std::move(bs));
      continue;
    }
    std::size_t from = *lo > 0 ? *lo - 1 : 0;
    std::size_t to = std::min(*hi + 1, segments.size() - 1);
    const std::size_t n = schema->body.size();

    std::optional<std::size_t> best;
    std::size_t best_overlap = 0;
    Binding best_binding;
    for (std::size_t w = from; w + n <= to + 1; ++w) {
      Binding b;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k) {
        const auto& seg = segments[w + k];
        const auto& pat = schema->body[k];
        if (claimed[w + k] || seg.primitive.kind != pat.kind) {
          ok = false;
          break;
        }
        for (std::size_t a = 0; a < pat.args.size() && ok; ++a) ok = unify(pat.args[a], seg.primitive.args[a], b);
      }
      if (!ok || !type_consistent(model, *schema, b, objs)) continue;
      std::size_t s0 = segments[w].start, s1 = segments[w + n - 1].end;
      std::size_t overlap = (std::min(s1, ann.end) >= std::max(s0, ann.start))
                                ? std::min(s1, ann.end) - std::max(s0, ann.start) + 1
                                : 0;
      if (!best || overlap > best_overlap) {
        best = w;
        best_overlap = overlap;
        best_binding = b;
      }
    }
    if (!best) {
      bs.valid = false;
      bs.error = "body does not match the primitives near the span";
      out.push_back(std::move(bs));
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      claimed[*best + k] = true;
      bs.primitives.push_back(segments[*best + k]);
    }
    bs.start = bs.primitives.front().start;
    bs.end = bs.primitives.back().end;
    complete_binding(model, *schema, best_binding, objs);
    bs.binding = std::move(best_binding);
    out.push_back(std::move(bs));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.annotation < b.annotation; });
  return out;
}

void render_primitives(const std::vector<ContactPrimitive>& prims, const RenderConfig& cfg,
                       std::vector<TraceRecord>& out, bool& open, std::optional<std::string>& held) {
  auto emit = [&](double w, std::optional<std::string> h, std::optional<std::string> c, std::optional<std::string> s) {
    std::size_t t = out.empty() ? 0 : out.back().t + 1;
    out.push_back({t, w, std::move(h), std::move(c), std::move(s)});
  };
  const std::size_t steps = std::max<std::size_t>(cfg.motion_steps, 1);
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const auto& p = prims[i];
    const auto arg = [&](std::size_t k) { return k < p.args.size() ? p.args[k] : std::nullopt; };
    switch (p.kind) {
      case PrimitiveKind::MoveTo:
        if (!open) throw ModelError("move-to with a closed gripper");
        for (std::size_t k = 0; k < steps; ++k) emit(1.0, std::nullopt, std::nullopt, std::nullopt);
        break;
      case PrimitiveKind::Grasp:
        if (!open) throw ModelError("grasp with a closed gripper");
        if (!arg(0)) throw ModelError("grasp of an unspecified object cannot be rendered");
        emit(0.5, std::nullopt, arg(0), std::nullopt);
        emit(0.0, arg(0), arg(0), arg(1));
        open = false;
        held = arg(0);
        break;
      case PrimitiveKind::Move:
        if (open || !held) throw ModelError("move without a held object");
        for (std::size_t k = 0; k < steps; ++k) emit(0.0, held, held, std::nullopt);
        break;
      case PrimitiveKind::Place:
        if (open || !held) throw ModelError("place without a held object");
        emit(0.5, held, held, arg(1));
        emit(1.0, std::nullopt, std::nullopt, arg(1));
        open = true;
        held.reset();
        break;
      case PrimitiveKind::Close: {
        if (!open) throw ModelError("close with a closed gripper");
        std::optional<std::string> target;
        if (i + 1 < prims.size() && prims[i + 1].kind == PrimitiveKind::Push) target = prims[i + 1].args[0];
        emit(0.5, std::nullopt, std::nullopt, std::nullopt);
        emit(0.0, std::nullopt, target, std::nullopt);
        open = false;
        break;
      }
      case PrimitiveKind::Push:
        if (open || held) throw ModelError("push needs a closed, empty gripper");
        for (std::size_t k = 0; k < steps; ++k) emit(0.0, std::nullopt, arg(0), std::nullopt);
        break;
      case PrimitiveKind::Open:
        if (open || held) throw ModelError("open needs a closed, empty gripper");
        emit(0.5, std::nullopt, std::nullopt, std::nullopt);
        emit(1.0, std::nullopt, std::nullopt, std::nullopt);
        open = true;
        break;
    }
  }
}

}  // namespace blade
