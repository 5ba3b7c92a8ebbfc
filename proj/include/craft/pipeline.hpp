#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "craft/chunker.hpp"
#include "craft/corpus.hpp"
#include "craft/lexicon.hpp"
#include "craft/matcher.hpp"
#include "craft/text.hpp"

namespace craft {

inline constexpr uint32_t kDefaultMaxTokens = 512;

enum class DedupMode { exact_hash, off };
DedupMode dedup_mode_from_name(std::string_view name);

struct ExtractionConfig {
  std::vector<CorpusSource> sources;
  std::vector<Lexicon> lexicons;
  uint32_t max_tokens = kDefaultMaxTokens;
  uint32_t min_distinct = kMinDistinctKeywords;
  uint32_t workers = 1;
  DedupMode dedup = DedupMode::exact_hash;
  std::string output_dir;
  std::map<std::string, uint64_t> target_counts;  // optional per-region caps
  // Serializes output by (document order, chunk index); makes runs
  // byte-identical for any worker count, including dedup survivors.
  bool stable_order = false;
  TokenCounterSpec token_counter;
  Compression output_compression = Compression::none;
  size_t queue_capacity = 512;  // bounded reader-to-worker queue
};

struct RunStats {
  uint64_t documents_read = 0;
  uint64_t documents_skipped = 0;
  uint64_t chunks_produced = 0;
  std::map<std::string, uint64_t> chunks_retained_per_region;
  uint64_t duplicates_dropped = 0;
  uint64_t bytes_processed = 0;
  double wall_seconds = 0.0;

  json to_json() const;
  static RunStats from_json(const json& j);
};

// Digest of the whitespace-normalized, case-folded chunk text. Two chunks
// with equal digests are treated as exact duplicates.
Digest128 dedup_key(std::string_view chunk_text);

// Runs read -> chunk -> match -> filter -> dedup over all sources and
// writes one candidates_<region>.jsonl per region plus extract_stats.json
// into output_dir. Per-record failures are counted and skipped; source
// level failures throw after flagging partial output in the stats file.
RunStats run_extraction(const ExtractionConfig& config);

// Bounded multi-producer/multi-consumer queue used between the reader and
// the worker pool.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    cv_push_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    cv_pop_.notify_one();
    return true;
  }

  bool pop(T& out) {
    std::unique_lock lock(mu_);
    cv_pop_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return false;
    out = std::move(items_.front());
    items_.pop_front();
    cv_push_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_pop_.notify_all();
    cv_push_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_push_;
  std::condition_variable cv_pop_;
  std::deque<T> items_;
  size_t capacity_;
  bool closed_ = false;
};

}  // namespace craft
