#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "craft/jsonl.hpp"

namespace craft {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  json sampling = json::object();  // passed through into the request body

  json to_body() const;
};

struct ChatResult {
  bool ok = false;
  int status = 0;          // HTTP status, 0 for transport-level failures
  std::string content;     // choices[0].message.content on success
  std::string error;
  bool retryable = false;  // 429, 5xx, timeouts, connection errors
};

// One chat-completion call. Implementations must be safe to call from
// multiple threads.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatResult send(const ChatRequest& request) = 0;
  virtual std::string describe() const = 0;
};

struct RetryPolicy {
  uint32_t max_attempts = 3;
  double backoff_base_seconds = 0.5;  // doubles per retry
};

struct EndpointConfig {
  std::string base_url;      // http(s)://host[:port][/prefix] or mock://name
  std::string model_name = "default";
  std::string api_key_env;   // name of the env var holding the key
  uint32_t max_concurrent_requests = 4;
  uint32_t requests_per_minute = 0;  // 0 = uncapped
  RetryPolicy retry;
  double timeout_seconds = 60.0;
  json sampling = json::object();
};

// POSTs {base_url}/chat/completions with an OpenAI-compatible body and
// reads choices[0].message.content. The API key is read from the process
// environment at construction, never from config files.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(const EndpointConfig& config);
  ~HttpChatTransport() override;

  ChatResult send(const ChatRequest& request) override;
  std::string describe() const override { return base_url_; }

 private:
  std::string base_url_;
  std::string host_part_;
  std::string path_prefix_;
  std::string api_key_;
  double timeout_seconds_;
};

// Deterministic in-process endpoints for offline runs and tests, selected
// by URL scheme:
//   mock://fixed?text=...   constant response
//   mock://qa               role-aware question/answer generator
//   mock://letter?value=A   constant option letter (eval dry runs)
// Anything else under mock:// fails fast.
std::unique_ptr<ChatTransport> make_mock_transport(const std::string& url);

// mock:// dispatches to make_mock_transport, everything else to HTTP.
std::unique_ptr<ChatTransport> make_transport(const EndpointConfig& config);

// Sliding-window limiter: at most `per_minute` acquisitions in any 60 s
// window. Clock and sleep are injectable for tests.
class RateLimiter {
 public:
  using TimePoint = std::chrono::steady_clock::time_point;
  using ClockFn = std::function<TimePoint()>;
  using SleepFn = std::function<void(std::chrono::milliseconds)>;

  explicit RateLimiter(uint32_t per_minute, ClockFn clock = nullptr, SleepFn sleep = nullptr);

  void acquire();

 private:
  uint32_t per_minute_;
  ClockFn clock_;
  SleepFn sleep_;
  std::mutex mu_;
  std::deque<TimePoint> issued_;
};

class EndpointError : public std::runtime_error {
 public:
  explicit EndpointError(const std::string& what) : std::runtime_error(what) {}
};

// A transport plus the endpoint's operational policy: a concurrency
// semaphore, the shared rate limiter and retry with exponential backoff.
class ChatEndpoint {
 public:
  ChatEndpoint(EndpointConfig config, std::unique_ptr<ChatTransport> transport,
               RateLimiter::SleepFn sleep = nullptr, RateLimiter::ClockFn clock = nullptr);

  // Builds the request from (system, user) content and runs the retry
  // loop. Returns the final result; never throws for per-request errors.
  ChatResult chat(const std::string& system_text, const std::string& user_text);

  // One tiny request to verify reachability. Auth failures (401/403) and
  // exhausted retries raise EndpointError.
  void probe();

  const EndpointConfig& config() const { return config_; }
  uint64_t retries() const { return retries_.load(); }
  uint64_t requests_sent() const { return requests_sent_.load(); }

 private:
  void acquire_slot();
  void release_slot();

  EndpointConfig config_;
  std::unique_ptr<ChatTransport> transport_;
  RateLimiter limiter_;
  RateLimiter::SleepFn sleep_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  uint32_t slots_in_use_ = 0;
  std::atomic<uint64_t> retries_{0};
  std::atomic<uint64_t> requests_sent_{0};
};

}  // namespace craft
