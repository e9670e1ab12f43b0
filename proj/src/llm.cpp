#include "blade/llm.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "blade/dialect.hpp"
#include "blade/resources.hpp"
#include "blade/sexpr.hpp"
#include "json.hpp"

namespace blade {

namespace {

std::string template_text(std::string_view name) {
  auto t = embedded_file(name);
  if (!t) throw LlmError("missing prompt template " + std::string(name));
  std::string s(*t);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// Replaces the text between the end of the line containing `marker` and the
// next blank line (or the end) with `lines`.
std::string replace_block(const std::string& text, std::string_view marker, const std::vector<std::string>& lines) {
  auto m = text.find(marker);
  if (m == std::string::npos) throw LlmError("template marker not found: " + std::string(marker));
  auto begin = text.find('\n', m);
  if (begin == std::string::npos) begin = text.size();
  else ++begin;
  auto end = text.find("\n\n", begin);
  if (end == std::string::npos) end = text.size();
  std::string block;
  for (std::size_t i = 0; i < lines.size(); ++i) block += (i ? "\n" : "") + lines[i];
  return text.substr(0, begin) + block + text.substr(end);
}

std::string display_name(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(sep) : "") + v[i];
  return out;
}

std::string environment_block(const GenerationContext& ctx) {
  std::string env = template_text("environment.txt");
  if (!ctx.predicate_list.empty()) {
    auto head_end = env.find("below:\n");
    auto tail = env.find("**Task Environment:**");
    if (head_end == std::string::npos || tail == std::string::npos) throw LlmError("environment template changed");
    std::string preds;
    for (const auto& p : ctx.predicate_list) preds += "- " + p.signature + (p.doc.empty() ? "" : ": " + p.doc) + "\n";
    env = env.substr(0, head_end + 7) + "\n" + preds + "\n" + env.substr(tail);
  }
  if (!ctx.objects.empty()) {
    std::vector<std::string> lines;
    for (const auto& o : ctx.objects) lines.push_back("- " + o);
    env = replace_block(env, "there are the following objects:", lines);
  }
  return env;
}

}  // namespace

std::string PromptBundle::system_text() const {
  std::string out;
  for (std::size_t i = 0; i < system_parts.size(); ++i) out += (i ? "\n\n" : "") + system_parts[i].text;
  return out;
}

std::string render_primitive_sequence(const std::vector<ContactPrimitive>& seq) {
  std::ostringstream os;
  os << "<code name=\"primitive_sequence\">\nprimitives = [\n";
  for (const auto& p : seq) {
    nlohmann::json args = nlohmann::json::array();
    for (const auto& a : p.args) args.push_back(a ? display_name(*a) : "");
    os << "  {\"name\": \"" << to_string(p.kind) << "\", \"arguments\": [";
    for (std::size_t i = 0; i < args.size(); ++i) os << (i ? ", " : "") << args[i].dump();
    os << "]}\n";
  }
  os << "]\n</code>";
  return os.str();
}

PromptBundle build_behavior_prompt(const GenerationContext& ctx) {
  if (ctx.behavior_label.empty()) throw LlmError("empty behavior label");
  if (ctx.primitive_sequences.empty()) throw LlmError("no primitive sequences for " + ctx.behavior_label);
  PromptBundle b;
  b.behavior = ctx.behavior_label;
  b.previous_tasks = ctx.previous_tasks;
  b.system_parts = {{"primitives", template_text("primitives.txt")},
                    {"environment", environment_block(ctx)},
                    {"in-context", template_text("in-context.txt")},
                    {"instructions", template_text("instructions.txt")}};
  std::ostringstream u;
  u << "**Current Task:** " << ctx.behavior_label << "\n\n**Example Sequences:**\n";
  for (std::size_t i = 0; i < ctx.primitive_sequences.size(); ++i)
    u << (i ? "\n\n" : "") << render_primitive_sequence(ctx.primitive_sequences[i]);
  u << "\n\n**Previous Tasks:** " << join(ctx.previous_tasks, ", ");
  b.user_part = u.str();
  return b;
}

PromptBundle build_predicate_prompt(const std::vector<std::string>& objects,
                                    const std::vector<std::string>& behavior_labels) {
  if (behavior_labels.empty()) throw LlmError("no behavior labels");
  std::string text = template_text("predicates.txt");
  if (!objects.empty()) {
    std::vector<std::string> lines;
    for (const auto& o : objects) lines.push_back("- " + o);
    text = replace_block(text, "there are the following objects:", lines);
  }
  std::vector<std::string> tasks;
  for (std::size_t i = 0; i < behavior_labels.size(); ++i)
    tasks.push_back(std::to_string(i + 1) + ". " + behavior_labels[i]);
  text = replace_block(text, "definitions for the following actions:", tasks);

  auto split = text.find("**Task**");
  PromptBundle b;
  b.system_parts = {{"predicate-generation", text.substr(0, split)}};
  while (!b.system_parts[0].text.empty() && b.system_parts[0].text.back() == '\n') b.system_parts[0].text.pop_back();
  b.user_part = text.substr(split);
  return b;
}

LlmResponse parse_mechanism(std::string_view text, const DomainModel& context) {
  static const std::regex open_tag(R"(<code\s+name\s*=\s*["']mechanism["']\s*>)");
  LlmResponse r;
  r.raw_text = std::string(text);
  auto first = std::sregex_iterator(r.raw_text.begin(), r.raw_text.end(), open_tag);
  auto n = std::distance(first, std::sregex_iterator());
  if (n == 0) {
    r.parse_errors.push_back("missing-block");
    return r;
  }
  if (n > 1) r.warnings.push_back(std::to_string(n) + " mechanism blocks, using the first");
  std::size_t begin = first->position() + first->length();
  auto end = r.raw_text.find("</code>", begin);
  if (end == std::string::npos) {
    r.parse_errors.push_back("unterminated mechanism block");
    return r;
  }
  try {
    auto schemas = parse_schemas(std::string_view(r.raw_text).substr(begin, end - begin), context);
    if (schemas.size() != 1) r.parse_errors.push_back("expected one mechanism, found " + std::to_string(schemas.size()));
    else r.parsed = schemas.front();
  } catch (const std::exception& e) {
    r.parse_errors.push_back(e.what());
  }
  return r;
}

FixtureClient::FixtureClient(std::filesystem::path root, std::string domain) : dir_(std::move(root) / domain) {}

std::string FixtureClient::complete(const PromptBundle& prompt, std::size_t attempt) {
  auto label_dir = dir_ / prompt.behavior;
  if (!std::filesystem::is_directory(label_dir)) label_dir = dir_ / normalize_identifier(prompt.behavior);
  if (!std::filesystem::is_directory(label_dir)) throw LlmError("no fixtures for " + prompt.behavior);
  std::filesystem::path file;
  for (std::size_t a = attempt + 1; a-- > 0;) {
    auto f = label_dir / (std::to_string(a) + ".txt");
    if (std::filesystem::exists(f)) {
      file = f;
      break;
    }
  }
  if (file.empty()) throw LlmError("no fixture at or below attempt " + std::to_string(attempt) + " for " + prompt.behavior);
  std::ifstream in(file, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool GenerationResult::ok() const { return failed_labels().empty() && verification.flagged.empty(); }

std::vector<std::string> GenerationResult::failed_labels() const {
  std::vector<std::string> out;
  for (const auto& [l, o] : labels)
    if (!o.accepted) out.push_back(l);
  return out;
}

namespace {

struct Regrounded {
  std::vector<std::vector<GroundBehavior>> sequences;
  std::map<std::string, std::string> errors;  // schema name -> grounding error
};

// Sequences are cut at steps the model has no schema for, so a missing
// definition never leaves stale values in the replay.
Regrounded reground(const LabeledCorpus& corpus, const DomainModel& model) {
  Regrounded out;
  ObjectSet objects = objects_of(model);
  for (const auto& demo : corpus) {
    std::vector<GroundBehavior> chunk;
    auto flush = [&] {
      if (!chunk.empty()) out.sequences.push_back(std::move(chunk));
      chunk.clear();
    };
    for (const auto& step : demo) {
      const auto* s = model.find_schema(normalize_identifier(step.label));
      if (!s || s->params.size() != step.args.size()) {
        if (s) out.errors.emplace(s->name, "arity mismatch with demonstrated arguments");
        flush();
        continue;
      }
      Binding b;
      for (std::size_t i = 0; i < s->params.size(); ++i) b[s->params[i].name] = step.args[i];
      try {
        chunk.push_back(ground_schema(model, *s, b, objects));
      } catch (const std::exception& e) {
        out.errors.emplace(s->name, e.what());
        flush();
      }
    }
    flush();
  }
  return out;
}

}  // namespace

GenerationResult generate_with_verification(const std::vector<GenerationContext>& ctxs, LlmClient& client,
                                            const DomainModel& skeleton, const LabeledCorpus& corpus,
                                            std::size_t max_retries, double threshold) {
  GenerationResult res;
  std::map<std::string, BehaviorSchema> accepted;
  std::vector<const GenerationContext*> pending;
  for (const auto& c : ctxs) {
    if (res.labels.contains(c.behavior_label)) throw LlmError("duplicate label " + c.behavior_label);
    res.labels[c.behavior_label];
    pending.push_back(&c);
  }

  auto assemble_accepted = [&](std::map<std::string, std::string>* rejected) {
    DomainModel m = skeleton;
    std::vector<BehaviorSchema> kept;
    for (const auto& c : ctxs) {
      auto it = accepted.find(c.behavior_label);
      if (it == accepted.end()) continue;
      kept.push_back(it->second);
      try {
        m = assemble(skeleton, kept);
      } catch (const std::exception& e) {
        kept.pop_back();
        if (rejected) (*rejected)[c.behavior_label] = e.what();
      }
    }
    return kept.empty() ? assemble(skeleton, {}) : m;
  };

  while (!pending.empty()) {
    for (const auto* c : pending) {
      auto& outcome = res.labels[c->behavior_label];
      AttemptRecord rec{outcome.attempts.size(), {}};
      try {
        auto resp = parse_mechanism(client.complete(build_behavior_prompt(*c), rec.attempt), skeleton);
        rec.errors = resp.parse_errors;
        if (resp.parsed) {
          if (resp.parsed->name != normalize_identifier(c->behavior_label))
            rec.errors.push_back("mechanism " + resp.parsed->name + " does not match label " + c->behavior_label);
          for (const auto& v : check_body_wellformed(*resp.parsed))
            rec.errors.push_back("body " + v.rule + " at " + std::to_string(v.index) + ": " + v.message);
          if (rec.errors.empty()) accepted[c->behavior_label] = *resp.parsed;
        }
      } catch (const std::exception& e) {
        rec.errors.push_back(e.what());
      }
      if (!rec.errors.empty()) accepted.erase(c->behavior_label);
      outcome.attempts.push_back(std::move(rec));
    }

    // Corpus-level check once every response of the round has landed.
    std::map<std::string, std::string> rejected;
    DomainModel m = assemble_accepted(&rejected);
    auto rg = reground(corpus, m);
    auto report = verify_descriptions(rg.sequences, m, threshold);
    for (const auto& c : ctxs) {
      auto it = accepted.find(c.behavior_label);
      if (it == accepted.end()) continue;
      const std::string& name = it->second.name;
      std::string why;
      if (rejected.contains(c.behavior_label)) why = rejected[c.behavior_label];
      else if (rg.errors.contains(name)) why = "grounding: " + rg.errors[name];
      else if (report.flagged.contains(name)) {
        std::ostringstream os;
        os << "verification: error rate " << report.error_rate[name] << " exceeds " << threshold;
        why = os.str();
      }
      if (why.empty()) continue;
      accepted.erase(it);
      res.labels[c.behavior_label].attempts.back().errors.push_back(why);
    }

    pending.clear();
    for (const auto& c : ctxs) {
      const auto& o = res.labels[c.behavior_label];
      if (!accepted.contains(c.behavior_label) && !o.attempts.back().errors.empty() &&
          o.attempts.size() <= max_retries)
        pending.push_back(&c);
    }
  }

  res.model = assemble_accepted(nullptr);
  res.verification = verify_descriptions(reground(corpus, res.model).sequences, res.model, threshold);
  for (auto& [label, o] : res.labels) {
    o.retries = o.attempts.empty() ? 0 : o.attempts.size() - 1;
    auto it = accepted.find(label);
    o.accepted = it != accepted.end();
    if (o.accepted) o.schema = it->second;
  }
  return res;
}

std::vector<PredicateCandidate> extract_predicate_candidates(std::string_view text) {
  static const std::regex lisp(
      R"(\(\s*([A-Za-z][A-Za-z0-9_-]*)((?:\s+\?[A-Za-z0-9_-]+(?:\s*-\s*[A-Za-z][A-Za-z0-9_-]*)?)+)\s*\))");
  static const std::regex call(R"(([A-Za-z][A-Za-z0-9_-]*)\(\s*(\?[A-Za-z0-9_-]+(?:\s*,\s*\?[A-Za-z0-9_-]+)*)\s*\))");
  static const std::regex var(R"(\?[A-Za-z0-9_-]+)");
  static const std::set<std::string> skip = {"grasp", "place", "move", "push", "move-to", "open", "close",
                                             "then",  "and",   "not",  "or",   "forall",  "exists"};
  std::vector<PredicateCandidate> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    for (const auto* re : {&lisp, &call}) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), *re); it != std::sregex_iterator(); ++it) {
        std::string name = normalize_identifier((*it)[1].str());
        if (skip.contains(name) || seen.contains(name)) continue;
        PredicateCandidate c;
        std::string params = (*it)[2].str();
        for (auto v = std::sregex_iterator(params.begin(), params.end(), var); v != std::sregex_iterator(); ++v)
          c.params.push_back(v->str());
        c.signature = {name, c.params.size(), false};
        c.context = line;
        seen.insert(name);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::string candidates_to_jsonl(const std::vector<PredicateCandidate>& candidates) {
  std::string out;
  for (const auto& c : candidates) {
    nlohmann::json j{{"name", c.signature.name},
                     {"arity", c.signature.arity},
                     {"params", c.params},
                     {"context", c.context},
                     {"status", "needs-review"}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace blade
