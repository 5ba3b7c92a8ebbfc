#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "craft/jsonl.hpp"

namespace craft {

// 150 keywords minimum per region by default.
inline constexpr size_t kLexiconMinSize = 150;

struct MatchPolicy {
  bool case_insensitive = true;
  // A match may not begin or end in the middle of an alphanumeric run
  // ("US" must not hit inside "USage").
  bool word_boundary = true;

  bool operator==(const MatchPolicy&) const = default;
};

struct Lexicon {
  std::string region_id;
  std::vector<std::string> keywords;  // normalized, sorted, unique
  MatchPolicy policy;
};

struct LexiconLoadOptions {
  size_t min_size = kLexiconMinSize;
  bool allow_small = false;  // downgrade the size check to a warning
};

struct LexiconLoadReport {
  size_t raw_entries = 0;
  size_t duplicates_removed = 0;
  std::vector<std::string> warnings;
};

class LexiconError : public std::runtime_error {
 public:
  explicit LexiconError(const std::string& what) : std::runtime_error(what) {}
};

// Keyword normalization: case fold (when the policy is case-insensitive)
// plus whitespace collapse and trim. Idempotent.
std::string normalize_keyword(std::string_view keyword, const MatchPolicy& policy);

// Loads either a plain list (one keyword per line, `#` comment lines) or a
// JSON region file {"region_id", "keywords", "case_insensitive",
// "word_boundary"}, chosen by the .json extension. An explicit region_id
// argument wins over the file's.
Lexicon load_lexicon(const std::string& path, const std::string& region_id = "",
                     const LexiconLoadOptions& options = {},
                     LexiconLoadReport* report = nullptr);

}  // namespace craft
