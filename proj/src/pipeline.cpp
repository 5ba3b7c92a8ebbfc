#include "craft/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <memory>
#include <set>
#include <thread>
#include <unordered_set>

namespace craft {

namespace fs = std::filesystem;

DedupMode dedup_mode_from_name(std::string_view name) {
  if (name == "exact_hash") return DedupMode::exact_hash;
  if (name == "off") return DedupMode::off;
  throw std::runtime_error("unknown dedup mode: " + std::string(name));
}

json RunStats::to_json() const {
  return json{{"documents_read", documents_read},
              {"documents_skipped", documents_skipped},
              {"chunks_produced", chunks_produced},
              {"chunks_retained_per_region", chunks_retained_per_region},
              {"duplicates_dropped", duplicates_dropped},
              {"bytes_processed", bytes_processed},
              {"wall_seconds", wall_seconds}};
}

RunStats RunStats::from_json(const json& j) {
  RunStats s;
  s.documents_read = j.at("documents_read").get<uint64_t>();
  s.documents_skipped = j.at("documents_skipped").get<uint64_t>();
  s.chunks_produced = j.at("chunks_produced").get<uint64_t>();
  s.chunks_retained_per_region =
      j.at("chunks_retained_per_region").get<std::map<std::string, uint64_t>>();
  s.duplicates_dropped = j.at("duplicates_dropped").get<uint64_t>();
  s.bytes_processed = j.at("bytes_processed").get<uint64_t>();
  s.wall_seconds = j.at("wall_seconds").get<double>();
  return s;
}

Digest128 dedup_key(std::string_view chunk_text) {
  return fingerprint128(normalize_text(chunk_text));
}

namespace {

struct OrderedCandidate {
  CandidateChunk candidate;
  uint64_t doc_ordinal = 0;
};

// Per-region output state. In streaming mode records are written as they
// arrive; in buffered mode they are collected, sorted by document order,
// deduplicated first-seen-wins and capped before writing.
struct RegionSink {
  std::string region;
  std::string path;
  std::mutex mu;
  std::unique_ptr<JsonlWriter> writer;  // streaming mode only
  std::unordered_set<Digest128, Digest128Hash> seen;
  std::vector<OrderedCandidate> buffered;
  uint64_t retained = 0;
  uint64_t dup_dropped = 0;
};

void validate_config(const ExtractionConfig& config) {
  if (config.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (config.max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
  if (config.lexicons.empty()) throw std::invalid_argument("at least one lexicon is required");
  if (config.sources.empty()) throw std::invalid_argument("at least one source is required");
  if (config.output_dir.empty()) throw std::invalid_argument("output_dir is required");
  std::set<std::string> regions;
  for (const Lexicon& lex : config.lexicons)
    if (!regions.insert(lex.region_id).second)
      throw std::invalid_argument("duplicate lexicon region id: " + lex.region_id);
}

bool ordinal_less(const OrderedCandidate& a, const OrderedCandidate& b) {
  if (a.doc_ordinal != b.doc_ordinal) return a.doc_ordinal < b.doc_ordinal;
  return a.candidate.chunk.chunk_index < b.candidate.chunk.chunk_index;
}

}  // namespace

RunStats run_extraction(const ExtractionConfig& config) {
  validate_config(config);
  const auto t0 = std::chrono::steady_clock::now();

  fs::create_directories(config.output_dir);
  const TokenCounter counter = TokenCounter::make(config.token_counter);

  std::vector<KeywordMatcher> matchers;
  matchers.reserve(config.lexicons.size());
  for (const Lexicon& lex : config.lexicons) matchers.emplace_back(lex);

  const bool buffered = config.stable_order || !config.target_counts.empty();
  const std::string suffix =
      config.output_compression == Compression::zstd ? ".jsonl.zst" : ".jsonl";

  std::vector<std::unique_ptr<RegionSink>> sinks;
  for (const KeywordMatcher& m : matchers) {
    auto sink = std::make_unique<RegionSink>();
    sink->region = m.region_id();
    sink->path = (fs::path(config.output_dir) / ("candidates_" + m.region_id() + suffix)).string();
    if (!buffered)
      sink->writer = std::make_unique<JsonlWriter>(sink->path, config.output_compression);
    sinks.push_back(std::move(sink));
  }

  BoundedQueue<Document> queue(config.queue_capacity);
  std::atomic<uint64_t> chunks_produced{0};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto record_error = [&](std::exception_ptr e) {
    std::lock_guard lock(error_mu);
    if (!first_error) first_error = e;
  };

  DocumentStream stream(config.sources);
  std::thread reader([&] {
    try {
      Document doc;
      while (stream.next(doc)) {
        if (!queue.push(std::move(doc))) return;  // queue closed on error
      }
    } catch (...) {
      record_error(std::current_exception());
    }
    queue.close();
  });

  auto process = [&] {
    try {
      Document doc;
      while (queue.pop(doc)) {
        const std::vector<Chunk> chunks = chunk_document(doc, config.max_tokens, counter);
        chunks_produced.fetch_add(chunks.size(), std::memory_order_relaxed);
        for (size_t m = 0; m < matchers.size(); ++m) {
          RegionSink& sink = *sinks[m];
          for (const Chunk& chunk : chunks) {
            const std::vector<KeywordHit> hits = matchers[m].find_hits(chunk.text);
            auto cand = filter_chunk(chunk, matchers[m].region_id(), hits, config.min_distinct);
            if (!cand) continue;
            if (buffered) {
              std::lock_guard lock(sink.mu);
              sink.buffered.push_back({std::move(*cand), doc.ordinal});
            } else if (config.dedup == DedupMode::exact_hash) {
              const Digest128 key = dedup_key(cand->chunk.text);
              std::lock_guard lock(sink.mu);
              if (sink.seen.insert(key).second) {
                sink.writer->write(cand->to_json());
                ++sink.retained;
              } else {
                ++sink.dup_dropped;
              }
            } else {
              std::lock_guard lock(sink.mu);
              sink.writer->write(cand->to_json());
              ++sink.retained;
            }
          }
        }
      }
    } catch (...) {
      record_error(std::current_exception());
      queue.close();
    }
  };

  std::vector<std::thread> workers;
  for (uint32_t w = 0; w < config.workers; ++w) workers.emplace_back(process);
  reader.join();
  for (std::thread& w : workers) w.join();

  RunStats stats;
  auto finalize_stats = [&] {
    stats.documents_read = stream.stats().documents_read;
    stats.documents_skipped = stream.stats().documents_skipped;
    stats.bytes_processed = stream.stats().bytes_processed;
    stats.chunks_produced = chunks_produced.load();
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  if (first_error) {
    for (auto& sink : sinks) {
      try {
        if (sink->writer) sink->writer->close();
      } catch (...) {
      }
    }
    finalize_stats();
    for (const auto& sink : sinks) {
      stats.chunks_retained_per_region[sink->region] = sink->retained;
      stats.duplicates_dropped += sink->dup_dropped;
    }
    json j = stats.to_json();
    j["partial"] = true;
    try {
      write_file((fs::path(config.output_dir) / "extract_stats.json").string(), j.dump(2) + "\n");
    } catch (...) {
    }
    std::rethrow_exception(first_error);
  }

  if (buffered) {
    for (auto& sink_ptr : sinks) {
      RegionSink& sink = *sink_ptr;
      std::sort(sink.buffered.begin(), sink.buffered.end(), ordinal_less);
      JsonlWriter writer(sink.path, config.output_compression);
      const auto cap_it = config.target_counts.find(sink.region);
      const uint64_t cap =
          cap_it != config.target_counts.end() ? cap_it->second : UINT64_MAX;
      for (const OrderedCandidate& oc : sink.buffered) {
        if (config.dedup == DedupMode::exact_hash &&
            !sink.seen.insert(dedup_key(oc.candidate.chunk.text)).second) {
          ++sink.dup_dropped;
          continue;
        }
        if (sink.retained >= cap) break;
        writer.write(oc.candidate.to_json());
        ++sink.retained;
      }
      writer.close();
    }
  } else {
    for (auto& sink : sinks) sink->writer->close();
  }

  finalize_stats();
  for (const auto& sink : sinks) {
    stats.chunks_retained_per_region[sink->region] = sink->retained;
    stats.duplicates_dropped += sink->dup_dropped;
  }
  write_file((fs::path(config.output_dir) / "extract_stats.json").string(),
             stats.to_json().dump(2) + "\n");
  return stats;
}

}  // namespace craft
