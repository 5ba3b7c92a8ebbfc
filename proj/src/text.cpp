#include "craft/text.hpp"

#include <array>
#include <cstring>

namespace craft {

bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len;
    uint32_t min_cp;
    uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      min_cp = 0x80;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      min_cp = 0x800;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      min_cp = 0x10000;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (cp < min_cp) return false;                  // overlong
    if (cp > 0x10FFFF) return false;                // out of range
    if (cp >= 0xD800 && cp <= 0xDFFF) return false; // surrogate
    i += len;
  }
  return true;
}

uint32_t decode_utf8(std::string_view s, size_t& pos) {
  const unsigned char c = static_cast<unsigned char>(s[pos]);
  size_t len;
  uint32_t cp;
  if (c < 0x80) {
    ++pos;
    return c;
  } else if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++pos;
    return c;
  }
  if (pos + len > s.size()) {
    ++pos;
    return c;
  }
  for (size_t k = 1; k < len; ++k) {
    const unsigned char cc = static_cast<unsigned char>(s[pos + k]);
    if ((cc & 0xC0) != 0x80) {
      ++pos;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  pos += len;
  return cp;
}

bool is_space_codepoint(uint32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::vector<TokenSpan> token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  size_t pos = 0;
  size_t tok_begin = std::string_view::npos;
  while (pos < text.size()) {
    const size_t at = pos;
    const uint32_t cp = decode_utf8(text, pos);
    if (is_space_codepoint(cp)) {
      if (tok_begin != std::string_view::npos) {
        spans.push_back({tok_begin, at});
        tok_begin = std::string_view::npos;
      }
    } else if (tok_begin == std::string_view::npos) {
      tok_begin = at;
    }
  }
  if (tok_begin != std::string_view::npos) spans.push_back({tok_begin, text.size()});
  return spans;
}

char fold_char(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = fold_char(c);
  return out;
}

std::string normalize_text(std::string_view s) {
  NormalizedText nt = normalize_with_map(s, /*case_fold=*/true);
  return std::move(nt.text);
}

NormalizedText normalize_with_map(std::string_view s, bool case_fold) {
  NormalizedText out;
  out.text.reserve(s.size());
  out.src_begin.reserve(s.size());
  out.src_end.reserve(s.size());

  size_t pos = 0;
  bool pending_space = false;
  size_t space_begin = 0;
  while (pos < s.size()) {
    const size_t at = pos;
    const uint32_t cp = decode_utf8(s, pos);
    if (is_space_codepoint(cp)) {
      if (!pending_space) {
        pending_space = true;
        space_begin = at;
      }
      continue;
    }
    if (pending_space) {
      if (!out.text.empty()) {  // leading runs are trimmed
        out.text.push_back(' ');
        out.src_begin.push_back(static_cast<uint32_t>(space_begin));
        out.src_end.push_back(static_cast<uint32_t>(at));
      }
      pending_space = false;
    }
    // Copy the code point byte for byte so offsets stay 1:1.
    for (size_t k = at; k < pos; ++k) {
      char c = s[k];
      if (case_fold) c = fold_char(c);
      out.text.push_back(c);
      out.src_begin.push_back(static_cast<uint32_t>(k));
      out.src_end.push_back(static_cast<uint32_t>(k + 1));
    }
  }
  return out;
}

namespace {

inline uint64_t rotl64(uint64_t x, int8_t r) { return (x << r) | (x >> (64 - r)); }

inline uint64_t fmix64(uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

inline uint64_t load64(const char* p) {
  uint64_t v;
  std::memcpy(&v, p, 8);
  return v;
}

}  // namespace

Digest128 fingerprint128(std::string_view data) {
  const size_t len = data.size();
  const size_t nblocks = len / 16;
  const char* p = data.data();

  uint64_t h1 = 0;
  uint64_t h2 = 0;
  const uint64_t c1 = 0x87c37b91114253d5ULL;
  const uint64_t c2 = 0x4cf5ad432745937fULL;

  for (size_t i = 0; i < nblocks; ++i) {
    uint64_t k1 = load64(p + i * 16);
    uint64_t k2 = load64(p + i * 16 + 8);
    k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
    h1 = rotl64(h1, 27); h1 += h2; h1 = h1 * 5 + 0x52dce729;
    k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
    h2 = rotl64(h2, 31); h2 += h1; h2 = h2 * 5 + 0x38495ab5;
  }

  const char* tail = p + nblocks * 16;
  uint64_t k1 = 0;
  uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[14])) << 48; [[fallthrough]];
    case 14: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[13])) << 40; [[fallthrough]];
    case 13: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[12])) << 32; [[fallthrough]];
    case 12: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[11])) << 24; [[fallthrough]];
    case 11: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[10])) << 16; [[fallthrough]];
    case 10: k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[9])) << 8; [[fallthrough]];
    case 9:
      k2 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[8]));
      k2 *= c2; k2 = rotl64(k2, 33); k2 *= c1; h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[7])) << 56; [[fallthrough]];
    case 7: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[6])) << 48; [[fallthrough]];
    case 6: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[5])) << 40; [[fallthrough]];
    case 5: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[4])) << 32; [[fallthrough]];
    case 4: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[3])) << 24; [[fallthrough]];
    case 3: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[2])) << 16; [[fallthrough]];
    case 2: k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[1])) << 8; [[fallthrough]];
    case 1:
      k1 ^= static_cast<uint64_t>(static_cast<unsigned char>(tail[0]));
      k1 *= c1; k1 = rotl64(k1, 31); k1 *= c2; h1 ^= k1;
      break;
    default:
      break;
  }

  h1 ^= static_cast<uint64_t>(len);
  h2 ^= static_cast<uint64_t>(len);
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;
  return Digest128{h1, h2};
}

namespace {

std::string u64_hex(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace

std::string Digest128::hex() const { return u64_hex(hi) + u64_hex(lo); }

unsigned __int128 Fnv128::init_state() {
  // FNV-1a 128-bit offset basis.
  unsigned __int128 v = 0x6c62272e07bb0142ULL;
  v = (v << 64) | 0x62b821756295c58dULL;
  return v;
}

void Fnv128::update(std::string_view data) {
  // FNV-1a 128-bit prime: 2^88 + 2^8 + 0x3b.
  unsigned __int128 prime = 1;
  prime <<= 88;
  prime += 0x13b;
  for (unsigned char c : data) {
    state_ ^= c;
    state_ *= prime;
  }
}

std::string Fnv128::hex() const {
  return u64_hex(static_cast<uint64_t>(state_ >> 64)) + u64_hex(static_cast<uint64_t>(state_));
}

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space_codepoint(static_cast<unsigned char>(s[b])) &&
         static_cast<unsigned char>(s[b]) < 0x80)
    ++b;
  while (e > b && is_space_codepoint(static_cast<unsigned char>(s[e - 1])) &&
         static_cast<unsigned char>(s[e - 1]) < 0x80)
    --e;
  return std::string(s.substr(b, e - b));
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace craft
