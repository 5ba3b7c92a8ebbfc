#include "craft/chunker.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "craft/text.hpp"

namespace craft {

TokenCounterMode token_counter_mode_from_name(std::string_view name) {
  if (name == "whitespace_punct") return TokenCounterMode::whitespace_punct;
  if (name == "external_vocab") return TokenCounterMode::external_vocab;
  throw std::runtime_error("unknown token counter mode: " + std::string(name));
}

TokenCounter TokenCounter::make(const TokenCounterSpec& spec) {
  TokenCounter tc(spec);
  if (spec.mode == TokenCounterMode::external_vocab) {
    std::ifstream in(spec.vocab_path);
    if (!in) throw IoError("token vocabulary not readable: " + spec.vocab_path);
    std::set<std::string> pieces;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) pieces.insert(line);
    }
    if (pieces.empty()) throw IoError("token vocabulary is empty: " + spec.vocab_path);
    auto vocab = std::make_shared<std::vector<std::string>>(pieces.begin(), pieces.end());
    for (const auto& p : *vocab) tc.max_piece_len_ = std::max(tc.max_piece_len_, p.size());
    tc.vocab_ = std::move(vocab);
  }
  return tc;
}

uint32_t TokenCounter::word_cost(std::string_view word) const {
  if (spec_.mode == TokenCounterMode::whitespace_punct) return word.empty() ? 0 : 1;
  uint32_t cost = 0;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t best = 0;
    const size_t limit = std::min(max_piece_len_, word.size() - pos);
    for (size_t len = limit; len >= 1; --len) {
      if (std::binary_search(vocab_->begin(), vocab_->end(), word.substr(pos, len))) {
        best = len;
        break;
      }
    }
    if (best == 0) {
      size_t p = pos;
      decode_utf8(word, p);  // unknown character: one token
      best = p - pos;
    }
    pos += best;
    ++cost;
  }
  return cost;
}

std::vector<size_t> TokenCounter::word_piece_boundaries(std::string_view word) const {
  std::vector<size_t> bounds;
  if (spec_.mode == TokenCounterMode::whitespace_punct) {
    if (!word.empty()) bounds.push_back(word.size());
    return bounds;
  }
  size_t pos = 0;
  while (pos < word.size()) {
    size_t best = 0;
    const size_t limit = std::min(max_piece_len_, word.size() - pos);
    for (size_t len = limit; len >= 1; --len) {
      if (std::binary_search(vocab_->begin(), vocab_->end(), word.substr(pos, len))) {
        best = len;
        break;
      }
    }
    if (best == 0) {
      size_t p = pos;
      decode_utf8(word, p);
      best = p - pos;
    }
    pos += best;
    bounds.push_back(pos);
  }
  return bounds;
}

uint32_t TokenCounter::count(std::string_view text) const {
  uint32_t total = 0;
  for (const TokenSpan& span : token_spans(text))
    total += word_cost(text.substr(span.begin, span.end - span.begin));
  return total;
}

uint32_t count_tokens(std::string_view text, const TokenCounter& counter) {
  return counter.count(text);
}

json Chunk::to_json() const {
  return json{{"doc_id", doc_id},   {"chunk_index", chunk_index}, {"text", text},
              {"token_count", token_count}, {"byte_start", byte_start}, {"byte_end", byte_end}};
}

namespace {

// One packable unit: a whole word, or one vocabulary piece when a word by
// itself blows the token budget and has to be cut mid-word.
struct Element {
  size_t begin = 0;
  size_t end = 0;
  uint32_t cost = 0;
  bool sentence_end = false;
};

bool ends_with_terminator(std::string_view word) {
  if (word.empty()) return false;
  const char c = word.back();
  return c == '.' || c == '!' || c == '?';
}

bool gap_has_newline(std::string_view text, size_t begin, size_t end) {
  for (size_t i = begin; i < end; ++i)
    if (text[i] == '\n' || text[i] == '\r') return true;
  return false;
}

std::vector<Element> build_elements(std::string_view text, uint32_t max_tokens,
                                    const TokenCounter& counter) {
  const std::vector<TokenSpan> words = token_spans(text);
  std::vector<Element> elems;
  elems.reserve(words.size());
  for (size_t w = 0; w < words.size(); ++w) {
    const TokenSpan& span = words[w];
    const std::string_view word = text.substr(span.begin, span.end - span.begin);
    const size_t gap_end = (w + 1 < words.size()) ? words[w + 1].begin : text.size();
    const bool sentence_end =
        ends_with_terminator(word) || gap_has_newline(text, span.end, gap_end);
    const uint32_t cost = counter.word_cost(word);
    if (cost <= max_tokens) {
      elems.push_back({span.begin, span.end, cost, sentence_end});
      continue;
    }
    // Forced mid-word cuts: one element per greedy piece. Piece boundaries
    // are greedy restart points, so recounting any split text is additive.
    size_t prev = 0;
    for (size_t bound : counter.word_piece_boundaries(word)) {
      const bool last = (bound == word.size());
      elems.push_back({span.begin + prev, span.begin + bound, 1, last && sentence_end});
      prev = bound;
    }
  }
  return elems;
}

}  // namespace

std::vector<Chunk> chunk_text(std::string_view doc_id, std::string_view text,
                              uint32_t max_tokens, const TokenCounter& counter) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  std::vector<Chunk> chunks;
  const std::vector<Element> elems = build_elements(text, max_tokens, counter);
  if (elems.empty()) return chunks;

  // Break positions: chunk i covers elements [breaks[i], breaks[i+1]).
  std::vector<size_t> breaks{0};
  std::vector<uint32_t> counts;
  size_t cur = 0;
  while (cur < elems.size()) {
    uint32_t budget = 0;
    size_t last_fit = cur;  // inclusive index of last element that fits
    for (size_t i = cur; i < elems.size(); ++i) {
      if (static_cast<uint64_t>(budget) + elems[i].cost > max_tokens) break;
      budget += elems[i].cost;
      last_fit = i;
    }
    // Prefer the last sentence terminator strictly inside the window, at
    // 50% fill or more; otherwise take the whole window (a hard cut when
    // more input remains, the final chunk when not).
    size_t cut = last_fit;
    uint32_t cut_count = budget;
    uint32_t prefix = 0;
    for (size_t b = cur; b < last_fit; ++b) {
      prefix += elems[b].cost;
      if (elems[b].sentence_end && static_cast<uint64_t>(prefix) * 2 >= max_tokens) {
        cut = b;
        cut_count = prefix;
      }
    }
    breaks.push_back(cut + 1);
    counts.push_back(cut_count);
    cur = cut + 1;
  }

  // Spans tile the whole document: [0, start of next chunk's first element).
  chunks.reserve(breaks.size() - 1);
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    Chunk c;
    c.doc_id = std::string(doc_id);
    c.chunk_index = static_cast<uint32_t>(k);
    c.byte_start = (k == 0) ? 0 : elems[breaks[k]].begin;
    c.byte_end = (breaks[k + 1] < elems.size()) ? elems[breaks[k + 1]].begin : text.size();
    c.text = std::string(text.substr(c.byte_start, c.byte_end - c.byte_start));
    c.token_count = counts[k];
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<Chunk> chunk_document(const Document& doc, uint32_t max_tokens,
                                  const TokenCounter& counter) {
  return chunk_text(doc.doc_id, doc.text, max_tokens, counter);
}

}  // namespace craft
