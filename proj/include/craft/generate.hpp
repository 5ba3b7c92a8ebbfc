#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "craft/chat.hpp"
#include "craft/matcher.hpp"

namespace craft {

class TemplateError : public std::runtime_error {
 public:
  explicit TemplateError(const std::string& what) : std::runtime_error(what) {}
};

// Fills {region}, {context}, {question}, {options} slots. Referencing a
// slot that has no binding fails loudly; substituted values are never
// rescanned, so braces inside corpus text are inert.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots);

struct PromptTemplate {
  std::string role_preamble;  // system text
  std::string user_body;      // user text with slots
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

RenderedPrompt render_prompt(const PromptTemplate& tmpl,
                             const std::map<std::string, std::string>& slots);

// Question prompt: fixed system instruction asking for exactly one
// question about the region; the chunk text goes in verbatim as the user
// message. Throws on an empty chunk.
RenderedPrompt make_question_prompt(std::string_view region_name, std::string_view chunk_text);

// Answer prompt: fixed "answer the question" system instruction. With a
// context the user message is the context, a blank line, then the
// question; without it, the question alone. Throws on an empty question.
RenderedPrompt make_answer_prompt(std::string_view question,
                                  std::optional<std::string_view> context);

enum class AnswerMode { context_dependent, context_free };
std::string answer_mode_name(AnswerMode mode);
AnswerMode answer_mode_from_name(std::string_view name);

enum class GenMode { context_dependent, context_free, both };
GenMode gen_mode_from_name(std::string_view name);  // "cd" | "cf" | "both"

struct InstructionRecord {
  std::string record_id;
  std::string region_id;
  std::string question;
  std::string answer;
  AnswerMode answer_mode = AnswerMode::context_dependent;
  std::string doc_id;       // source provenance
  uint32_t chunk_index = 0;
  std::string question_model;
  std::string answer_model;
  std::string created_at;   // ISO 8601 UTC

  json to_json() const;
  static InstructionRecord from_json(const json& j);
};

struct ValidatePolicy {
  size_t min_answer_chars = 20;  // code points, after trim
  bool require_question_mark = false;
};

struct ValidationResult {
  bool accepted = false;
  std::string reason;  // empty_question | empty_answer | echo | too_short | no_question_mark
};

ValidationResult validate_record(const InstructionRecord& record, const ValidatePolicy& policy = {});

// Region display names used inside prompts; ids without an entry fall back
// to the id itself.
std::map<std::string, std::string> default_region_names();

struct GenOptions {
  GenMode mode = GenMode::both;
  uint64_t limit = 0;  // 0 = no limit
  bool stable_order = false;
  bool probe = true;
  ValidatePolicy validation;
  std::map<std::string, std::string> region_names = default_region_names();
};

struct GenStats {
  uint64_t chunks_in = 0;
  uint64_t records_emitted = 0;
  uint64_t question_failures = 0;  // chunks dropped: no question after retries
  uint64_t answer_failures = 0;    // per-answer request failures
  uint64_t validation_rejects = 0;
  uint64_t retries = 0;
  uint64_t requests_sent = 0;

  json to_json() const;
};

// One question per chunk, one answer per requested mode. Respects each
// endpoint's concurrency and rate caps; transient failures retry with
// exponential backoff; chunks whose retries are exhausted are counted and
// skipped. `emit` is called once per accepted record.
GenStats generate_batch(const std::vector<CandidateChunk>& candidates,
                        ChatEndpoint& question_endpoint, ChatEndpoint& answer_endpoint,
                        const GenOptions& options,
                        const std::function<void(const InstructionRecord&)>& emit);

std::string iso8601_utc_now();

}  // namespace craft
