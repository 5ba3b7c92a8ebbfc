#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "craft/jsonl.hpp"

namespace craft {

inline constexpr uint64_t kDefaultGeneralCount = 50000;
inline constexpr uint64_t kDefaultCulturalCount = 20000;
inline constexpr uint64_t kDefaultSweepStep = 2500;

class MixError : public std::runtime_error {
 public:
  explicit MixError(const std::string& what) : std::runtime_error(what) {}
};

struct MixSpec {
  std::string general_source;
  std::string cultural_source;
  uint64_t general_count = kDefaultGeneralCount;
  uint64_t cultural_count = kDefaultCulturalCount;
  uint64_t seed = 0;
  bool shuffle_output = true;
  bool allow_short = false;  // otherwise a short pool is fatal
  std::string output_path;

  json to_json() const;
  static MixSpec from_json(const json& j);  // accepts the to_json keys plus output_path
};

struct MixManifest {
  MixSpec spec;
  uint64_t actual_general = 0;
  uint64_t actual_cultural = 0;
  std::string output_path;
  std::string content_digest;  // fnv1a128 over the output bytes
  std::string created_at;

  json to_json() const;
};

// Seeded generator for a named draw; distinct tags give independent
// streams from one user seed.
std::mt19937_64 make_rng(uint64_t seed, uint64_t stream_tag);

inline constexpr uint64_t kGeneralDrawTag = 0x67656e6572616cULL;   // "general"
inline constexpr uint64_t kCulturalDrawTag = 0x63756c7475ULL;      // "cultu"
inline constexpr uint64_t kShuffleDrawTag = 0x7368756666ULL;       // "shuff"

// Uniform sample of k indices without replacement from [0, pool_size),
// via a partial Fisher-Yates permutation. Samples are nested: the first
// k draws of a (k+1)-sample equal the k-sample, for any same-seeded rng.
std::vector<uint64_t> sample_prefix(uint64_t pool_size, uint64_t k, std::mt19937_64& rng);

enum class ExportFormat { chat_jsonl, prompt_completion };
ExportFormat export_format_from_name(std::string_view name);

// Converts one pool record into the target schema. Records already in
// chat form pass through unchanged apart from meta tagging done by the
// mixer. Instruction records become a two-turn conversation with their
// provenance under "meta". Missing fields throw MixError.
json convert_record(const json& record, ExportFormat target);

// Re-extract (question, answer) from a converted record; used by tests
// and by downstream consumers that need the raw pair back.
std::pair<std::string, std::string> extract_qa(const json& record);

// Assembles general_count + cultural_count records into output_path as
// chat JSONL with meta.origin tags, writes a manifest next to it and
// returns the manifest. Byte-identical across reruns of the same spec.
MixManifest mix_datasets(const MixSpec& spec);

// One mix per cultural count in {0, step, 2*step, ...} up to max_cultural
// inclusive. Every point shares the general sample (same seed) and the
// cultural samples are nested. Outputs land in out_dir as
// mix_g<G>_c<C>.jsonl plus per-point manifests and sweep_manifest.json.
std::vector<MixManifest> ratio_sweep(const MixSpec& base, uint64_t step, uint64_t max_cultural,
                                     const std::string& out_dir);

}  // namespace craft
