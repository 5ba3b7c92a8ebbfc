#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "craft/chunker.hpp"
#include "craft/lexicon.hpp"

namespace craft {

// Keep a chunk when it contains at least this many distinct keywords.
inline constexpr uint32_t kMinDistinctKeywords = 2;

struct KeywordHit {
  std::string keyword;     // normalized form
  size_t byte_offset = 0;  // match start in the original chunk text
  size_t byte_len = 0;     // length of the matched region in original bytes

  bool operator==(const KeywordHit&) const = default;
};

// Compiled multi-pattern matcher (Aho-Corasick over normalized text).
// Immutable after construction; usable from any number of threads.
class KeywordMatcher {
 public:
  explicit KeywordMatcher(const Lexicon& lexicon);

  // Every occurrence of every keyword, sorted by byte offset (keyword as
  // tie-break). Matching is done in normalized space (case fold per the
  // policy, whitespace runs collapsed) so multi-word keywords match any
  // whitespace between their words; offsets map back to original bytes.
  std::vector<KeywordHit> find_hits(std::string_view chunk_text) const;

  const std::string& region_id() const { return region_id_; }
  const MatchPolicy& policy() const { return policy_; }
  const std::vector<std::string>& keywords() const { return keywords_; }

 private:
  struct Node {
    std::map<unsigned char, int32_t> next;
    int32_t fail = 0;
    int32_t dict = -1;  // nearest fail ancestor that ends a keyword
    std::vector<uint32_t> out;
  };

  void add_pattern(const std::string& pattern, uint32_t index);
  void build_links();

  std::string region_id_;
  MatchPolicy policy_;
  std::vector<std::string> keywords_;
  std::vector<Node> nodes_;
};

// Reference scan used by tests: tries every keyword at every offset of the
// normalized text with the same boundary predicate. Kept independent of
// the automaton so it can serve as an oracle for it.
std::vector<KeywordHit> naive_find_hits(std::string_view chunk_text, const Lexicon& lexicon);

struct CandidateChunk {
  Chunk chunk;
  std::string region_id;
  std::vector<std::string> distinct_keywords;  // sorted
  uint32_t hit_count = 0;

  json to_json() const;
  static CandidateChunk from_json(const json& j);
};

// Retention rule: keep the chunk iff it contains >= min_distinct DISTINCT
// keywords. Repeat occurrences of one keyword count once.
std::optional<CandidateChunk> filter_chunk(const Chunk& chunk, const std::string& region_id,
                                           const std::vector<KeywordHit>& hits,
                                           uint32_t min_distinct = kMinDistinctKeywords);

}  // namespace craft
