#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "craft/chat.hpp"

namespace craft {

// Accuracy is reported as the mean over this many paraphrased templates.
inline constexpr size_t kEvalTemplateCount = 5;

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

struct EvalItem {
  std::string item_id;
  std::string question;
  std::vector<std::string> options;  // 2..6, pairwise distinct
  uint32_t gold_index = 0;
};

// Loader adapter: evaluate() consumes EvalItems, so any dataset layout
// plugs in through a function with this shape.
using EvalDatasetLoader = std::function<std::vector<EvalItem>(const std::string& path)>;

// Default loader: JSONL {"question", "options": [...], "answer_index",
// "id"?}. Items without an id get their zero-based ordinal. Violations
// of the option invariants are fatal with the line number.
std::vector<EvalItem> load_eval_dataset(const std::string& path);

// Five paraphrased prompt templates. Each must reference {question} and
// {options}; the option block is rendered identically under every
// template, only the surrounding phrasing differs.
class TemplatePack {
 public:
  static TemplatePack builtin();
  // Loads template_0.txt .. template_4.txt from a directory.
  static TemplatePack load_dir(const std::string& dir);

  const std::string& at(size_t index) const;
  size_t size() const { return templates_.size(); }

 private:
  explicit TemplatePack(std::array<std::string, kEvalTemplateCount> templates);
  std::array<std::string, kEvalTemplateCount> templates_;
};

// "A. <option>" lines, one per option, newline separated.
std::string option_block(const EvalItem& item);

std::string render_eval_prompt(const EvalItem& item, const TemplatePack& templates,
                               size_t template_index);

// Choice extraction, rule 1: first standalone option letter (word
// boundaries, case-insensitive, optionally followed by ')' '.' or ':').
// nullopt when none is found.
std::optional<uint32_t> parse_choice(std::string_view response, uint32_t n_options);

// Full precedence: the letter rule, then unique containment of exactly
// one option's text. nullopt responses score as incorrect, not excluded.
std::optional<uint32_t> parse_choice(std::string_view response,
                                     const std::vector<std::string>& options);

struct ResponseLogEntry {
  std::string item_id;
  uint32_t template_index = 0;
  std::string raw_response;
  std::optional<uint32_t> parsed_index;
  bool correct = false;

  json to_json() const;
};

struct EvalReport {
  std::string dataset_name;
  std::string model_name;
  std::vector<double> per_template_accuracy;  // one per template
  double mean_accuracy = 0.0;
  double stddev = 0.0;  // population stddev over the template accuracies
  uint64_t items_total = 0;
  uint64_t items_unparsed = 0;
  bool valid = true;   // false when the run aborted mid-way
  std::string error;

  json to_json() const;
};

struct EvalOptions {
  uint32_t concurrency = 4;
  std::string response_log_path;  // optional JSONL log of every response
  std::string dataset_name;
  std::string model_name;
};

// Queries every item under each template, scores with parse_choice and
// averages over templates. An endpoint failure aborts the run; the
// partial report comes back with valid=false and the error message.
EvalReport evaluate(const std::vector<EvalItem>& items, ChatEndpoint& endpoint,
                    const TemplatePack& templates, const EvalOptions& options = {});

}  // namespace craft
