#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "craft/corpus.hpp"

namespace craft {

enum class TokenCounterMode { whitespace_punct, external_vocab };

struct TokenCounterSpec {
  TokenCounterMode mode = TokenCounterMode::whitespace_punct;
  std::string vocab_path;  // required for external_vocab
};

TokenCounterMode token_counter_mode_from_name(std::string_view name);

// Deterministic, pure token counting.
//
// whitespace_punct: a maximal run of non-whitespace characters is one
// token, so punctuation stays attached to the word it follows.
//
// external_vocab: per word, greedy longest-match against a vocabulary
// file (one piece per line); any character not covered by a piece counts
// as one token. A missing vocabulary file fails at construction, before
// any pipeline work starts.
class TokenCounter {
 public:
  static TokenCounter make(const TokenCounterSpec& spec);

  uint32_t count(std::string_view text) const;

  // Cost of a single whitespace-delimited word (no internal whitespace).
  uint32_t word_cost(std::string_view word) const;

  // Byte offsets of the greedy piece boundaries inside one word, used to
  // split words that alone exceed a chunk budget. Boundaries exclude 0,
  // include word.size().
  std::vector<size_t> word_piece_boundaries(std::string_view word) const;

  TokenCounterMode mode() const { return spec_.mode; }

 private:
  explicit TokenCounter(TokenCounterSpec spec) : spec_(std::move(spec)) {}

  TokenCounterSpec spec_;
  std::shared_ptr<const std::vector<std::string>> vocab_;  // sorted unique pieces
  size_t max_piece_len_ = 0;
};

uint32_t count_tokens(std::string_view text, const TokenCounter& counter);

struct Chunk {
  std::string doc_id;
  uint32_t chunk_index = 0;
  std::string text;
  uint32_t token_count = 0;
  uint64_t byte_start = 0;
  uint64_t byte_end = 0;

  json to_json() const;
};

// Splits a document into contiguous chunks of at most max_tokens tokens.
// Byte spans tile the document exactly: chunk 0 starts at byte 0, each
// chunk ends where the next begins, the last chunk ends at text end, so
// concatenating the chunk texts reproduces the document byte for byte.
// A document with no tokens yields no chunks.
//
// Boundary rule: fill the window greedily, then back up to the last
// sentence terminator (., !, ? at the end of a word, or a newline after
// it) that lies strictly inside the window at 50% or more of max_tokens;
// without one the cut falls at the full window (a hard cut mid-sentence
// when more input remains).
std::vector<Chunk> chunk_document(const Document& doc, uint32_t max_tokens,
                                  const TokenCounter& counter);

std::vector<Chunk> chunk_text(std::string_view doc_id, std::string_view text,
                              uint32_t max_tokens, const TokenCounter& counter);

}  // namespace craft
