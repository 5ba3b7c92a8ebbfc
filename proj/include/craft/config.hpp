#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "craft/chat.hpp"
#include "craft/evalharness.hpp"
#include "craft/generate.hpp"
#include "craft/jsonl.hpp"
#include "craft/lexicon.hpp"
#include "craft/mixer.hpp"
#include "craft/pipeline.hpp"

namespace craft {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExtractSettings {
  std::vector<std::string> sources;
  std::vector<std::string> lexicons;
  std::string output_dir = "out";
  uint32_t max_tokens = kDefaultMaxTokens;
  uint32_t min_distinct = kMinDistinctKeywords;
  uint32_t workers = 2;
  std::string dedup = "exact_hash";
  bool stable_order = false;
  std::string text_field = "text";
  std::string compression = "auto";
  std::string output_compression = "none";
  size_t min_keywords = kLexiconMinSize;
  bool allow_small_lexicon = false;
  std::map<std::string, uint64_t> targets;
  std::string token_counter = "whitespace_punct";
  std::string vocab_path;
  size_t queue_capacity = 512;
};

struct GenerateSettings {
  std::string mode = "both";
  uint64_t limit = 0;
  bool stable_order = false;
  size_t min_answer_chars = 20;
  bool require_question_mark = false;
  std::map<std::string, std::string> region_names = default_region_names();
};

struct MixSettings {
  std::string general_source;
  std::string cultural_source;
  uint64_t general_count = kDefaultGeneralCount;
  uint64_t cultural_count = kDefaultCulturalCount;
  uint64_t seed = 0;
  bool shuffle_output = true;
  bool allow_short = false;
};

struct SweepSettings {
  uint64_t step = kDefaultSweepStep;
  uint64_t max_cultural = kDefaultCulturalCount;
};

struct EvalSettings {
  std::string dataset;
  std::string templates_dir;  // empty = built-in pack
  std::string out = "eval_report.json";
  std::string response_log;
  uint32_t concurrency = 4;
};

struct AppConfig {
  ExtractSettings extract;
  EndpointConfig question_endpoint;
  EndpointConfig answer_endpoint;
  EndpointConfig eval_endpoint;
  GenerateSettings generate;
  MixSettings mix;
  SweepSettings sweep;
  EvalSettings eval;
  std::string log_level = "info";
  std::string output_root = ".";

  json to_json() const;
  std::string digest() const;  // fnv1a128 of the resolved config
};

// Sectioned key/value config ("[section]" headers, "key = value" lines,
// full-line # or ; comments). Unknown keys are fatal in strict mode and
// warnings otherwise. An empty path yields the built-in defaults.
AppConfig load_config(const std::string& path, bool strict = true,
                      std::vector<std::string>* warnings = nullptr);

// Validates the cross-field invariants; throws ConfigError naming the
// offending field.
void validate_config(const AppConfig& config);

// Standalone endpoint file: the endpoint keys (base_url, model,
// api_key_env, ...) as key = value lines; a [section] header is optional
// and ignored.
EndpointConfig load_endpoint_file(const std::string& path);

// Run record written next to each stage's outputs.
void write_run_record(const std::string& path, const std::string& command,
                      const AppConfig& config, const json& stats, double duration_seconds);

}  // namespace craft
