#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace craft {

// UTF-8 helpers. Documents are required to be valid UTF-8; records that
// fail validation are skipped upstream, so the routines below may assume
// well-formed input and fall back to byte-wise handling when it is not.
bool is_valid_utf8(std::string_view s);

// Decodes one code point starting at `pos`. Returns the code point and
// advances `pos` past it. Invalid sequences decode as a single byte.
uint32_t decode_utf8(std::string_view s, size_t& pos);

// Whitespace per the Unicode space list (ASCII spaces, NBSP, the U+2000
// block, line/paragraph separators, ideographic space).
bool is_space_codepoint(uint32_t cp);

struct TokenSpan {
  size_t begin = 0;  // byte offset of first byte
  size_t end = 0;    // one past last byte
};

// Maximal runs of non-whitespace bytes, in order.
std::vector<TokenSpan> token_spans(std::string_view text);

// ASCII case fold. Non-ASCII bytes pass through unchanged.
std::string fold_case(std::string_view s);
char fold_char(char c);

// Canonical text form shared by lexicon keywords, the matcher haystack and
// dedup keys: case fold, collapse every whitespace run to a single space,
// trim the ends. Idempotent.
std::string normalize_text(std::string_view s);

// normalize_text plus a byte-level map back into the original string, so
// match offsets found in normalized space can be reported against the
// original text.
struct NormalizedText {
  std::string text;
  std::vector<uint32_t> src_begin;  // src_begin[i]: original offset of byte i
  std::vector<uint32_t> src_end;    // src_end[i]: one past the original bytes behind byte i
};
NormalizedText normalize_with_map(std::string_view s, bool case_fold);

// 128-bit content fingerprint (MurmurHash3 x64 variant). Used for exact
// dedup keys; equality of digests is treated as equality of inputs.
struct Digest128 {
  uint64_t hi = 0;
  uint64_t lo = 0;

  bool operator==(const Digest128&) const = default;
  auto operator<=>(const Digest128&) const = default;
  std::string hex() const;
};

struct Digest128Hash {
  size_t operator()(const Digest128& d) const noexcept {
    return static_cast<size_t>(d.hi ^ (d.lo * 0x9e3779b97f4a7c15ULL));
  }
};

Digest128 fingerprint128(std::string_view data);

// Streaming FNV-1a over 128 bits, for digests of whole files.
class Fnv128 {
 public:
  void update(std::string_view data);
  std::string hex() const;

 private:
  unsigned __int128 state_ = init_state();
  static unsigned __int128 init_state();
};

std::string trim(std::string_view s);

// splitmix64, used to derive independent seed streams from one user seed.
uint64_t splitmix64(uint64_t x);

// Unbiased draw in [0, n) via rejection sampling; identical on every
// platform given the same generator state.
template <class Rng>
uint64_t bounded_rand(Rng& rng, uint64_t n) {
  if (n == 0) return 0;
  const uint64_t lim = UINT64_MAX - UINT64_MAX % n;
  uint64_t x = rng();
  while (x >= lim) x = rng();
  return x % n;
}

}  // namespace craft
