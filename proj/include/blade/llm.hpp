#pragma once

// Prompt construction for behavior and predicate generation, completion
// clients (recorded fixtures or a live endpoint) and the loop that resamples
// definitions failing verification.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blade/model.hpp"
#include "blade/operator_lab.hpp"

namespace blade {

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PromptPart {
  std::string name;
  std::string text;
};

struct PromptBundle {
  std::vector<PromptPart> system_parts;
  std::string user_part;
  std::string behavior;  // label as given, e.g. "place_in_drawer"
  std::vector<std::string> previous_tasks;

  /// System parts joined by blank lines.
  std::string system_text() const;
};

struct PredicateDoc {
  std::string signature;  // "(is-open ?x - item)"
  std::string doc;
};

struct GenerationContext {
  std::string behavior_label;
  std::vector<std::vector<ContactPrimitive>> primitive_sequences;
  std::vector<std::string> previous_tasks;
  // Empty: the CALVIN predicate and object sections of the templates are used.
  std::vector<PredicateDoc> predicate_list;
  std::vector<std::string> objects;  // "A table. Objects can be placed on the table."
};

/// Throws LlmError on an empty label or no primitive sequences.
PromptBundle build_behavior_prompt(const GenerationContext& ctx);

/// `objects` empty keeps the template's CALVIN object list.
PromptBundle build_predicate_prompt(const std::vector<std::string>& objects,
                                    const std::vector<std::string>& behavior_labels);

/// The `<code name="primitive_sequence">` rendering of one sequence.
std::string render_primitive_sequence(const std::vector<ContactPrimitive>& seq);

struct LlmResponse {
  std::string raw_text;
  std::optional<BehaviorSchema> parsed;
  std::vector<std::string> parse_errors;
  std::vector<std::string> warnings;
};

/// First `<code name="mechanism">` block, parsed against the declarations of
/// `context`. Errors land in parse_errors ("missing-block", parser messages).
LlmResponse parse_mechanism(std::string_view response_text, const DomainModel& context);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const PromptBundle& prompt, std::size_t attempt) = 0;
};

/// Replays `<root>/<domain>/<label>/<attempt>.txt`. A missing attempt falls
/// back to the highest recorded one; a missing label throws LlmError.
class FixtureClient : public LlmClient {
 public:
  FixtureClient(std::filesystem::path root, std::string domain);
  std::string complete(const PromptBundle& prompt, std::size_t attempt) override;

 private:
  std::filesystem::path dir_;
};

struct HttpClientConfig {
  std::string endpoint;  // full URL of a chat-completions route
  std::string api_key;
  std::string model;
  std::optional<double> temperature;
  std::optional<std::filesystem::path> record_root;  // fixture root to write
  std::string domain;
  int timeout_seconds = 120;

  /// BLADE_LLM_ENDPOINT, BLADE_LLM_API_KEY, BLADE_LLM_MODEL.
  static HttpClientConfig from_env();
};

class HttpClient : public LlmClient {
 public:
  explicit HttpClient(HttpClientConfig cfg);
  std::string complete(const PromptBundle& prompt, std::size_t attempt) override;

 private:
  HttpClientConfig cfg_;
};

/// One demonstrated behavior in a generation corpus.
struct CorpusStep {
  std::string label;
  std::vector<std::string> args;
};
using LabeledCorpus = std::vector<std::vector<CorpusStep>>;

struct AttemptRecord {
  std::size_t attempt = 0;
  std::vector<std::string> errors;  // empty: accepted
};

struct LabelOutcome {
  bool accepted = false;
  std::size_t retries = 0;
  std::vector<AttemptRecord> attempts;
  std::optional<BehaviorSchema> schema;
};

struct GenerationResult {
  DomainModel model;  // skeleton plus every accepted schema
  std::map<std::string, LabelOutcome> labels;
  VerificationReport verification;  // of the final model

  bool ok() const;
  std::vector<std::string> failed_labels() const;
};

/// Request, parse, body check for every label; then verification over the
/// corpus. Rejected labels are re-requested until `max_retries` retries are
/// spent; the last accepted attempt wins.
GenerationResult generate_with_verification(const std::vector<GenerationContext>& ctxs, LlmClient& client,
                                            const DomainModel& skeleton, const LabeledCorpus& corpus,
                                            std::size_t max_retries = 2, double threshold = 0.1);

struct PredicateCandidate {
  PredicateSignature signature;
  std::vector<std::string> params;
  std::string context;  // the line it was found on
};

/// Every `(name ?a ?b ...)` form in free text, first occurrence per name,
/// primitive names skipped.
std::vector<PredicateCandidate> extract_predicate_candidates(std::string_view text);
std::string candidates_to_jsonl(const std::vector<PredicateCandidate>& candidates);

}  // namespace blade
