#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "craft/chat.hpp"
#include "craft/lexicon.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "craft_test") {
    static std::atomic<uint64_t> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string content;
  for (const std::string& line : lines) {
    content += line;
    content += '\n';
  }
  craft::write_file(path, content);
}

inline craft::Lexicon make_lexicon(const std::string& region,
                                   const std::vector<std::string>& keywords,
                                   craft::MatchPolicy policy = {}) {
  craft::Lexicon lex;
  lex.region_id = region;
  lex.policy = policy;
  std::vector<std::string> normalized;
  for (const auto& k : keywords) {
    std::string n = craft::normalize_keyword(k, policy);
    if (!n.empty()) normalized.push_back(std::move(n));
  }
  std::sort(normalized.begin(), normalized.end());
  normalized.erase(std::unique(normalized.begin(), normalized.end()), normalized.end());
  lex.keywords = std::move(normalized);
  return lex;
}

// Scripted chat transport: answers via a handler and keeps a request log.
// Tracks in-flight concurrency so tests can assert the cap.
class ScriptedTransport final : public craft::ChatTransport {
 public:
  using Handler = std::function<craft::ChatResult(const craft::ChatRequest&, uint64_t ordinal)>;

  explicit ScriptedTransport(Handler handler) : handler_(std::move(handler)) {}

  craft::ChatResult send(const craft::ChatRequest& request) override {
    const uint32_t now_in_flight = ++in_flight_;
    uint32_t seen = max_in_flight_.load();
    while (now_in_flight > seen && !max_in_flight_.compare_exchange_weak(seen, now_in_flight)) {
    }
    const uint64_t ordinal = ordinal_.fetch_add(1);
    {
      std::lock_guard lock(mu_);
      request_log_.push_back(request);
    }
    const craft::ChatResult result = handler_(request, ordinal);
    --in_flight_;
    return result;
  }

  std::string describe() const override { return "scripted-mock"; }

  std::vector<craft::ChatRequest> requests() const {
    std::lock_guard lock(mu_);
    return request_log_;
  }
  uint32_t max_in_flight() const { return max_in_flight_.load(); }
  uint64_t calls() const { return ordinal_.load(); }

 private:
  Handler handler_;
  mutable std::mutex mu_;
  std::vector<craft::ChatRequest> request_log_;
  std::atomic<uint64_t> ordinal_{0};
  std::atomic<uint32_t> in_flight_{0};
  std::atomic<uint32_t> max_in_flight_{0};
};

inline craft::ChatResult ok_result(const std::string& content) {
  return craft::ChatResult{true, 200, content, "", false};
}

inline craft::ChatResult failure_result(int status) {
  craft::ChatResult r;
  r.status = status;
  r.error = "HTTP " + std::to_string(status);
  r.retryable = status == 429 || status >= 500;
  return r;
}

// Random word generator for synthetic corpora; deterministic per seed.
class WordGen {
 public:
  explicit WordGen(uint64_t seed) : rng_(seed) {}

  std::string word() {
    static const char* alphabet = "abcdefghijklmnopqrstuvwxyz";
    const size_t len = 1 + rng_() % 9;
    std::string w;
    for (size_t i = 0; i < len; ++i) w += alphabet[rng_() % 26];
    return w;
  }

  std::string sentence(size_t words) {
    std::string s;
    for (size_t i = 0; i < words; ++i) {
      if (i) s += ' ';
      s += word();
    }
    s += '.';
    return s;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testutil
