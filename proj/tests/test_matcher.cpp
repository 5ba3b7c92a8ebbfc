#include <doctest.h>

#include <random>

#include "craft/matcher.hpp"
#include "testutil.hpp"

using namespace craft;
using testutil::make_lexicon;

TEST_SUITE("matcher") {

TEST_CASE("single pattern single hit") {
  const Lexicon lex = make_lexicon("sg", {"Merlion"});
  const KeywordMatcher matcher(lex);
  const auto hits = matcher.find_hits("The Merlion statue");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].keyword == "merlion");
  CHECK(hits[0].byte_offset == 4);
  CHECK(hits[0].byte_len == 7);
}

TEST_CASE("overlapping patterns both report") {
  const Lexicon lex = make_lexicon("sg", {"Merlion", "Merlion Park"});
  const KeywordMatcher matcher(lex);
  const auto hits = matcher.find_hits("Merlion Park");
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].keyword == "merlion");
  CHECK(hits[1].keyword == "merlion park");
  CHECK(hits == naive_find_hits("Merlion Park", lex));
}

TEST_CASE("word boundary blocks mid-run matches") {
  const Lexicon lex = make_lexicon("us", {"US"});
  const KeywordMatcher matcher(lex);
  CHECK(matcher.find_hits("USage").empty());
  CHECK(matcher.find_hits("the USage pattern").empty());
  CHECK(matcher.find_hits("in the US today").size() == 1);
  CHECK(matcher.find_hits("US-based").size() == 1);  // hyphen is a boundary

  SUBCASE("disabled boundary matches inside runs") {
    MatchPolicy relaxed;
    relaxed.word_boundary = false;
    const Lexicon loose = make_lexicon("us", {"US"}, relaxed);
    CHECK(KeywordMatcher(loose).find_hits("USage").size() == 1);
  }
}

TEST_CASE("case sensitivity follows the policy") {
  MatchPolicy cs;
  cs.case_insensitive = false;
  const Lexicon lex = make_lexicon("sg", {"Merlion"}, cs);
  const KeywordMatcher matcher(lex);
  CHECK(matcher.find_hits("the merlion").empty());
  CHECK(matcher.find_hits("the Merlion").size() == 1);
}

TEST_CASE("multi-word keywords match across whitespace runs") {
  const Lexicon lex = make_lexicon("sg", {"National Day Parade"});
  const KeywordMatcher matcher(lex);
  const std::string text = "the National  Day\nParade yesterday";
  const auto hits = matcher.find_hits(text);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].byte_offset == 4);
  CHECK(text.substr(hits[0].byte_offset, hits[0].byte_len) == "National  Day\nParade");
}

TEST_CASE("empty text has no hits") {
  const Lexicon lex = make_lexicon("sg", {"Merlion"});
  CHECK(KeywordMatcher(lex).find_hits("").empty());
  CHECK(KeywordMatcher(lex).find_hits("   \n ").empty());
}

TEST_CASE("no cultural content means no hits") {
  const Lexicon lex = make_lexicon("sg", {"Merlion", "Orchard Road", "HDB flats"});
  CHECK(KeywordMatcher(lex).find_hits("nothing cultural here").empty());
}

TEST_CASE("three hits two distinct") {
  const Lexicon lex = make_lexicon("sg", {"Merlion", "Orchard Road"});
  const KeywordMatcher matcher(lex);
  const auto hits = matcher.find_hits("Merlion near Orchard Road and the Merlion again");
  CHECK(hits.size() == 3);
  Chunk chunk;
  chunk.text = "irrelevant";
  const auto cand = filter_chunk(chunk, "sg", hits, 2);
  REQUIRE(cand.has_value());
  CHECK(cand->hit_count == 3);
  CHECK(cand->distinct_keywords == std::vector<std::string>{"merlion", "orchard road"});
}

TEST_CASE("the canonical two-keyword pair retains") {
  const Lexicon lex = make_lexicon("sg", {"National Day Parade", "Merlion"});
  const KeywordMatcher matcher(lex);
  Chunk chunk;
  chunk.doc_id = "d";
  chunk.text = "Crowds gather for the National Day Parade near the Merlion each August.";
  const auto hits = matcher.find_hits(chunk.text);
  const auto cand = filter_chunk(chunk, "sg", hits, 2);
  REQUIRE(cand.has_value());
  CHECK(cand->distinct_keywords == std::vector<std::string>{"merlion", "national day parade"});
}

TEST_CASE("empty lexicon cannot build") {
  Lexicon empty;
  empty.region_id = "x";
  CHECK_THROWS_AS(KeywordMatcher{empty}, LexiconError);
}

TEST_CASE("filter rules") {
  Chunk chunk;
  chunk.doc_id = "d";
  chunk.text = "text";
  const KeywordHit a{"alpha", 0, 5};
  const KeywordHit b{"beta", 6, 4};

  SUBCASE("repeat hits of one keyword are not distinct") {
    CHECK_FALSE(filter_chunk(chunk, "sg", {a, a, a}, 2).has_value());
  }
  SUBCASE("two distinct keywords retain") {
    const auto cand = filter_chunk(chunk, "sg", {a, b}, 2);
    REQUIRE(cand.has_value());
    CHECK(cand->distinct_keywords.size() == 2);
    CHECK(cand->region_id == "sg");
  }
  SUBCASE("no hits never retain") {
    CHECK_FALSE(filter_chunk(chunk, "sg", {}, 2).has_value());
  }
  SUBCASE("min_distinct one means any hit retains") {
    CHECK(filter_chunk(chunk, "sg", {a}, 1).has_value());
    CHECK_FALSE(filter_chunk(chunk, "sg", {}, 1).has_value());
  }
  SUBCASE("min_distinct zero always retains") {
    CHECK(filter_chunk(chunk, "sg", {}, 0).has_value());
  }
}

namespace {

std::string random_text_with_plants(std::mt19937_64& rng, const std::vector<std::string>& keywords) {
  testutil::WordGen gen(rng());
  std::string text;
  const size_t segments = 1 + rng() % 40;
  for (size_t s = 0; s < segments; ++s) {
    if (!text.empty()) {
      switch (rng() % 5) {
        case 0: text += "  "; break;
        case 1: text += "\n"; break;
        case 2: text += "\t"; break;
        default: text += " ";
      }
    }
    const uint64_t kind = rng() % 10;
    if (kind < 3) {
      // plant a keyword, sometimes glued to letters to stress boundaries
      std::string kw = keywords[rng() % keywords.size()];
      if (rng() % 2) {
        for (char& c : kw)
          if (rng() % 3 == 0 && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      }
      if (kind == 0) text += "x" + kw;       // left-glued
      else if (kind == 1) text += kw + "y";  // right-glued
      else text += kw;
    } else if (kind < 5) {
      text += gen.word() + (rng() % 4 == 0 ? "." : "");
    } else {
      text += gen.sentence(1 + rng() % 6);
    }
  }
  return text;
}

}  // namespace

TEST_CASE("automaton equals the naive oracle on randomized texts") {
  const std::vector<std::string> keywords = {
      "Merlion",        "Merlion Park",   "Park",        "National Day Parade",
      "National Day",   "Day",            "US",          "USA",
      "HDB flats",      "HDB",            "Orchard Road", "Road",
      "an",             "and",            "Sentosa",      "Sentosa Island Resort"};
  std::mt19937_64 rng(4242);

  for (const bool boundary : {true, false}) {
    MatchPolicy policy;
    policy.word_boundary = boundary;
    const Lexicon lex = make_lexicon("sg", keywords, policy);
    const KeywordMatcher matcher(lex);
    for (int i = 0; i < 400; ++i) {
      const std::string text = random_text_with_plants(rng, keywords);
      CAPTURE(boundary);
      CAPTURE(text);
      const auto fast = matcher.find_hits(text);
      const auto slow = naive_find_hits(text, lex);
      REQUIRE(fast.size() == slow.size());
      CHECK(fast == slow);
    }
  }
}

TEST_CASE("adding a keyword never removes hits") {
  std::mt19937_64 rng(777);
  const std::vector<std::string> base_kw = {"Merlion", "Orchard Road", "HDB"};
  const Lexicon base = make_lexicon("sg", base_kw);
  std::vector<std::string> extended_kw = base_kw;
  extended_kw.push_back("Park");
  extended_kw.push_back("Merlion Park");
  const Lexicon extended = make_lexicon("sg", extended_kw);
  const KeywordMatcher m_base(base);
  const KeywordMatcher m_ext(extended);
  for (int i = 0; i < 100; ++i) {
    const std::string text = random_text_with_plants(rng, extended_kw);
    const auto small = m_base.find_hits(text);
    const auto big = m_ext.find_hits(text);
    for (const KeywordHit& h : small) {
      CHECK(std::find(big.begin(), big.end(), h) != big.end());
    }
  }
}

TEST_CASE("candidate chunk record schema") {
  Chunk chunk;
  chunk.doc_id = "f.jsonl#3";
  chunk.chunk_index = 1;
  chunk.text = "Merlion and Orchard Road";
  chunk.token_count = 4;
  const auto cand = filter_chunk(chunk, "sg", {{"merlion", 0, 7}, {"orchard road", 12, 12}}, 2);
  REQUIRE(cand.has_value());
  const json j = cand->to_json();
  for (const char* key :
       {"doc_id", "chunk_index", "region", "text", "token_count", "distinct_keywords", "hit_count"})
    CHECK(j.contains(key));
  const CandidateChunk back = CandidateChunk::from_json(j);
  CHECK(back.chunk.doc_id == cand->chunk.doc_id);
  CHECK(back.distinct_keywords == cand->distinct_keywords);
}

}  // TEST_SUITE
