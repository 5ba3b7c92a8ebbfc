#include "craft/matcher.hpp"

#include <algorithm>
#include <deque>

#include "craft/text.hpp"

namespace craft {

namespace {

// Alphanumeric-run membership for the boundary rule. Bytes >= 0x80 count
// as word bytes so a keyword never matches inside a non-ASCII word.
inline bool is_word_byte(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

inline bool boundary_ok(std::string_view text, size_t begin, size_t end) {
  if (begin > 0 && is_word_byte(text[begin - 1]) && is_word_byte(text[begin])) return false;
  if (end < text.size() && is_word_byte(text[end]) && is_word_byte(text[end - 1])) return false;
  return true;
}

}  // namespace

KeywordMatcher::KeywordMatcher(const Lexicon& lexicon)
    : region_id_(lexicon.region_id), policy_(lexicon.policy), keywords_(lexicon.keywords) {
  if (keywords_.empty()) throw LexiconError("cannot build a matcher from an empty lexicon");
  nodes_.emplace_back();
  for (uint32_t i = 0; i < keywords_.size(); ++i) add_pattern(keywords_[i], i);
  build_links();
}

void KeywordMatcher::add_pattern(const std::string& pattern, uint32_t index) {
  int32_t node = 0;
  for (const char c : pattern) {
    const unsigned char u = static_cast<unsigned char>(c);
    auto it = nodes_[static_cast<size_t>(node)].next.find(u);
    if (it == nodes_[static_cast<size_t>(node)].next.end()) {
      const int32_t child = static_cast<int32_t>(nodes_.size());
      nodes_[static_cast<size_t>(node)].next.emplace(u, child);
      nodes_.emplace_back();
      node = child;
    } else {
      node = it->second;
    }
  }
  nodes_[static_cast<size_t>(node)].out.push_back(index);
}

void KeywordMatcher::build_links() {
  std::deque<int32_t> queue;
  for (const auto& [c, child] : nodes_[0].next) {
    nodes_[static_cast<size_t>(child)].fail = 0;
    queue.push_back(child);
  }
  while (!queue.empty()) {
    const int32_t n = queue.front();
    queue.pop_front();
    Node& node = nodes_[static_cast<size_t>(n)];
    node.dict = !nodes_[static_cast<size_t>(node.fail)].out.empty()
                    ? node.fail
                    : nodes_[static_cast<size_t>(node.fail)].dict;
    for (const auto& [c, child] : node.next) {
      int32_t f = node.fail;
      while (f != 0 && !nodes_[static_cast<size_t>(f)].next.count(c))
        f = nodes_[static_cast<size_t>(f)].fail;
      const auto it = nodes_[static_cast<size_t>(f)].next.find(c);
      nodes_[static_cast<size_t>(child)].fail =
          (it != nodes_[static_cast<size_t>(f)].next.end() && it->second != child) ? it->second : 0;
      queue.push_back(child);
    }
  }
}

std::vector<KeywordHit> KeywordMatcher::find_hits(std::string_view chunk_text) const {
  const NormalizedText norm = normalize_with_map(chunk_text, policy_.case_insensitive);
  const std::string_view hay = norm.text;

  std::vector<KeywordHit> hits;
  int32_t state = 0;
  for (size_t pos = 0; pos < hay.size(); ++pos) {
    const unsigned char c = static_cast<unsigned char>(hay[pos]);
    while (true) {
      const auto it = nodes_[static_cast<size_t>(state)].next.find(c);
      if (it != nodes_[static_cast<size_t>(state)].next.end()) {
        state = it->second;
        break;
      }
      if (state == 0) break;
      state = nodes_[static_cast<size_t>(state)].fail;
    }
    int32_t n = nodes_[static_cast<size_t>(state)].out.empty()
                    ? nodes_[static_cast<size_t>(state)].dict
                    : state;
    for (; n != -1; n = nodes_[static_cast<size_t>(n)].dict) {
      for (const uint32_t kw : nodes_[static_cast<size_t>(n)].out) {
        const size_t len = keywords_[kw].size();
        const size_t begin = pos + 1 - len;
        if (policy_.word_boundary && !boundary_ok(hay, begin, pos + 1)) continue;
        KeywordHit hit;
        hit.keyword = keywords_[kw];
        hit.byte_offset = norm.src_begin[begin];
        hit.byte_len = norm.src_end[pos] - norm.src_begin[begin];
        hits.push_back(std::move(hit));
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
    if (a.byte_offset != b.byte_offset) return a.byte_offset < b.byte_offset;
    return a.keyword < b.keyword;
  });
  return hits;
}

std::vector<KeywordHit> naive_find_hits(std::string_view chunk_text, const Lexicon& lexicon) {
  const NormalizedText norm = normalize_with_map(chunk_text, lexicon.policy.case_insensitive);
  const std::string_view hay = norm.text;

  std::vector<KeywordHit> hits;
  for (const std::string& kw : lexicon.keywords) {
    if (kw.empty() || kw.size() > hay.size()) continue;
    for (size_t pos = 0; pos + kw.size() <= hay.size(); ++pos) {
      if (hay.compare(pos, kw.size(), kw) != 0) continue;
      if (lexicon.policy.word_boundary && !boundary_ok(hay, pos, pos + kw.size())) continue;
      KeywordHit hit;
      hit.keyword = kw;
      hit.byte_offset = norm.src_begin[pos];
      hit.byte_len = norm.src_end[pos + kw.size() - 1] - norm.src_begin[pos];
      hits.push_back(std::move(hit));
    }
  }
  std::sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
    if (a.byte_offset != b.byte_offset) return a.byte_offset < b.byte_offset;
    return a.keyword < b.keyword;
  });
  return hits;
}

json CandidateChunk::to_json() const {
  return json{{"doc_id", chunk.doc_id},
              {"chunk_index", chunk.chunk_index},
              {"region", region_id},
              {"text", chunk.text},
              {"token_count", chunk.token_count},
              {"distinct_keywords", distinct_keywords},
              {"hit_count", hit_count}};
}

CandidateChunk CandidateChunk::from_json(const json& j) {
  CandidateChunk c;
  c.chunk.doc_id = j.at("doc_id").get<std::string>();
  c.chunk.chunk_index = j.at("chunk_index").get<uint32_t>();
  c.chunk.text = j.at("text").get<std::string>();
  c.chunk.token_count = j.at("token_count").get<uint32_t>();
  c.region_id = j.at("region").get<std::string>();
  c.distinct_keywords = j.at("distinct_keywords").get<std::vector<std::string>>();
  c.hit_count = j.at("hit_count").get<uint32_t>();
  return c;
}

std::optional<CandidateChunk> filter_chunk(const Chunk& chunk, const std::string& region_id,
                                           const std::vector<KeywordHit>& hits,
                                           uint32_t min_distinct) {
  std::vector<std::string> distinct;
  distinct.reserve(hits.size());
  for (const KeywordHit& h : hits) distinct.push_back(h.keyword);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < min_distinct) return std::nullopt;

  CandidateChunk out;
  out.chunk = chunk;
  out.region_id = region_id;
  out.distinct_keywords = std::move(distinct);
  out.hit_count = static_cast<uint32_t>(hits.size());
  return out;
}

}  // namespace craft
