#include <doctest.h>

#include <random>

#include "craft/chunker.hpp"
#include "craft/text.hpp"
#include "testutil.hpp"

using namespace craft;

namespace {

TokenCounter default_counter() { return TokenCounter::make(TokenCounterSpec{}); }

// Last word of a chunk ends a sentence, or the trailing gap holds a
// newline. Used to recognize boundary-preference splits from the outside.
bool chunk_ends_at_sentence(const Chunk& c) {
  const auto spans = token_spans(c.text);
  if (spans.empty()) return false;
  const TokenSpan last = spans.back();
  const char last_char = c.text[last.end - 1];
  if (last_char == '.' || last_char == '!' || last_char == '?') return true;
  for (size_t i = last.end; i < c.text.size(); ++i)
    if (c.text[i] == '\n' || c.text[i] == '\r') return true;
  return false;
}

std::string concat_chunks(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const Chunk& c : chunks) out += c.text;
  return out;
}

}  // namespace

TEST_SUITE("chunker") {

TEST_CASE("count_tokens fixed values") {
  const TokenCounter counter = default_counter();
  CHECK(count_tokens("", counter) == 0);
  // Whitespace-run counting: punctuation attaches to the preceding word.
  CHECK(count_tokens("Merlion Park, Singapore.", counter) == 3);
  CHECK(count_tokens("one two  three", counter) == 3);
  CHECK(count_tokens("  padded  ", counter) == 1);
  CHECK(count_tokens("dash-joined stays one", counter) == 3);

  SUBCASE("hand-verified batch of twenty strings") {
    const std::vector<std::pair<const char*, uint32_t>> cases = {
        {"a", 1},
        {"a b", 2},
        {"a  b", 2},
        {"a\tb\nc", 3},
        {"Hello, world!", 2},
        {"The quick brown fox.", 4},
        {"one", 1},
        {" leading", 1},
        {"trailing ", 1},
        {"\n\n", 0},
        {"don't stop", 2},
        {"semi;colon", 1},
        {"A. B. C.", 3},
        {"x y z w", 4},
        {"tab\tseparated\twords", 3},
        {"caf\xc3\xa9 au lait", 3},
        {"nb\xc2\xa0space", 2},     // NBSP splits
        {"1 2 3 4 5", 5},
        {"(parens) [brackets]", 2},
        {"ellipsis... here", 2},
    };
    for (const auto& [text, expected] : cases) {
      CAPTURE(text);
      CHECK(count_tokens(text, counter) == expected);
    }
  }
}

TEST_CASE("600 single-space words count 600") {
  const TokenCounter counter = default_counter();
  std::string text;
  for (int i = 0; i < 600; ++i) {
    if (i) text += ' ';
    text += "w" + std::to_string(i);
  }
  CHECK(count_tokens(text, counter) == 600);
}

TEST_CASE("external vocab counter") {
  testutil::TempDir tmp;
  testutil::write_lines(tmp.file("vocab.txt"), {"ab", "b", "cde", "x"});
  TokenCounterSpec spec;
  spec.mode = TokenCounterMode::external_vocab;
  spec.vocab_path = tmp.file("vocab.txt");
  const TokenCounter counter = TokenCounter::make(spec);
  CHECK(counter.count("ab") == 1);
  CHECK(counter.count("abb") == 2);    // greedy: ab + b
  CHECK(counter.count("cdex") == 2);   // cde + x
  CHECK(counter.count("q") == 1);      // unknown char
  CHECK(counter.count("ab cde") == 2);
  CHECK(counter.count("") == 0);

  SUBCASE("missing vocab fails at construction") {
    TokenCounterSpec bad;
    bad.mode = TokenCounterMode::external_vocab;
    bad.vocab_path = tmp.file("nope.txt");
    CHECK_THROWS_AS(TokenCounter::make(bad), IoError);
  }
}

TEST_CASE("single chunk when the document fits") {
  const TokenCounter counter = default_counter();
  testutil::WordGen gen(3);
  const std::string text = gen.sentence(100);
  const auto chunks = chunk_text("d", text, 512, counter);
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].token_count == 100);
  CHECK(chunks[0].chunk_index == 0);
  CHECK(chunks[0].text == text);
}

TEST_CASE("1024 unpunctuated words hard-cut into two 512-token chunks") {
  const TokenCounter counter = default_counter();
  std::string text;
  for (int i = 0; i < 1024; ++i) {
    if (i) text += ' ';
    text += "w" + std::to_string(i);
  }
  const auto chunks = chunk_text("d", text, 512, counter);
  REQUIRE(chunks.size() == 2);
  CHECK(chunks[0].token_count == 512);
  CHECK(chunks[1].token_count == 512);
  CHECK(concat_chunks(chunks) == text);
}

TEST_CASE("sentence boundaries split A. B. C. at max_tokens 2") {
  const TokenCounter counter = default_counter();
  const auto chunks = chunk_text("d", "A. B. C.", 2, counter);
  REQUIRE(chunks.size() == 3);
  CHECK(trim(chunks[0].text) == "A.");
  CHECK(trim(chunks[1].text) == "B.");
  CHECK(trim(chunks[2].text) == "C.");
  for (const Chunk& c : chunks) CHECK(c.token_count == 1);
}

TEST_CASE("boundary preference needs half a window") {
  const TokenCounter counter = default_counter();
  // Terminator after the first of six words: below the 50% fill bar, so
  // the split is a hard cut at the window instead.
  const auto chunks = chunk_text("d", "a. b c d e f g h", 6, counter);
  REQUIRE(chunks.size() >= 2);
  CHECK(chunks[0].token_count == 6);
}

TEST_CASE("empty and whitespace-only documents yield no chunks") {
  const TokenCounter counter = default_counter();
  CHECK(chunk_text("d", "", 512, counter).empty());
  CHECK(chunk_text("d", " \t\n ", 512, counter).empty());
}

TEST_CASE("word longer than the budget is cut at piece boundaries") {
  testutil::TempDir tmp;
  testutil::write_lines(tmp.file("vocab.txt"), {"ab"});
  TokenCounterSpec spec;
  spec.mode = TokenCounterMode::external_vocab;
  spec.vocab_path = tmp.file("vocab.txt");
  const TokenCounter counter = TokenCounter::make(spec);
  // one word, 8 pieces of "ab": cost 8 > max 3
  const std::string text = "abababababababab";
  const auto chunks = chunk_text("d", text, 3, counter);
  REQUIRE(chunks.size() == 3);
  for (const Chunk& c : chunks) {
    CHECK(c.token_count <= 3);
    CHECK(c.token_count == counter.count(c.text));
  }
  CHECK(concat_chunks(chunks) == text);
}

TEST_CASE("chunk invariants on randomized documents") {
  const TokenCounter counter = default_counter();
  std::mt19937_64 rng(20260808);
  testutil::WordGen gen(99);
  const uint32_t max_tokens = 64;

  for (int doc = 0; doc < 300; ++doc) {
    std::string text;
    const size_t words = rng() % 300;
    for (size_t w = 0; w < words; ++w) {
      if (w) text += (rng() % 12 == 0) ? "\n" : " ";
      std::string word = gen.word();
      const uint64_t p = rng() % 10;
      if (p == 0) word += '.';
      else if (p == 1) word += '!';
      else if (p == 2) word += '?';
      text += word;
    }
    CAPTURE(doc);
    const auto chunks = chunk_text("d", text, max_tokens, counter);

    if (token_spans(text).empty()) {
      CHECK(chunks.empty());
      continue;
    }
    REQUIRE(!chunks.empty());
    CHECK(concat_chunks(chunks) == text);  // exact tiling
    for (size_t i = 0; i < chunks.size(); ++i) {
      CHECK(chunks[i].chunk_index == i);
      CHECK(chunks[i].token_count <= max_tokens);
      CHECK(chunks[i].token_count == counter.count(chunks[i].text));  // self-consistency
      CHECK(is_valid_utf8(chunks[i].text));
    }
    for (size_t i = 0; i + 1 < chunks.size(); ++i) {
      const bool mergeable = chunks[i].token_count + chunks[i + 1].token_count <= max_tokens;
      if (mergeable) CHECK(chunk_ends_at_sentence(chunks[i]));
    }
  }
}

TEST_CASE("multibyte words chunk on character boundaries") {
  const TokenCounter counter = default_counter();
  std::string text;
  for (int i = 0; i < 40; ++i) {
    if (i) text += ' ';
    text += (i % 3 == 0) ? "caf\xc3\xa9" : (i % 3 == 1 ? "\xe6\x96\x87\xe5\xad\x97" : "na\xc3\xafve");
  }
  const auto chunks = chunk_text("d", text, 7, counter);
  REQUIRE(chunks.size() == 6);
  std::string rebuilt;
  for (const Chunk& c : chunks) {
    CHECK(is_valid_utf8(c.text));
    CHECK(c.token_count <= 7);
    CHECK(c.byte_end <= text.size());
    rebuilt += c.text;
  }
  CHECK(rebuilt == text);
}

TEST_CASE("max_tokens below one is rejected") {
  const TokenCounter counter = default_counter();
  CHECK_THROWS_AS(chunk_text("d", "a b", 0, counter), std::invalid_argument);
}

}  // TEST_SUITE
