#include "craft/chat.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "craft/text.hpp"

namespace craft {

json ChatRequest::to_body() const {
  json msgs = json::array();
  for (const ChatMessage& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body{{"model", model}, {"messages", std::move(msgs)}};
  for (const auto& [k, v] : sampling.items()) body[k] = v;
  return body;
}

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // httplib client target
  std::string path_prefix;       // possibly empty, no trailing slash
};

ParsedUrl parse_http_url(const std::string& url) {
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw EndpointError("endpoint URL must include a scheme: " + url);
  const size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

std::string query_param(const std::string& url, const std::string& key, const std::string& dflt) {
  const size_t q = url.find('?');
  if (q == std::string::npos) return dflt;
  std::string rest = url.substr(q + 1);
  size_t pos = 0;
  while (pos < rest.size()) {
    size_t amp = rest.find('&', pos);
    if (amp == std::string::npos) amp = rest.size();
    const std::string pair = rest.substr(pos, amp - pos);
    const size_t eq = pair.find('=');
    if (eq != std::string::npos && pair.substr(0, eq) == key) return pair.substr(eq + 1);
    pos = amp + 1;
  }
  return dflt;
}

}  // namespace

HttpChatTransport::HttpChatTransport(const EndpointConfig& config)
    : base_url_(config.base_url), timeout_seconds_(config.timeout_seconds) {
  const ParsedUrl parsed = parse_http_url(config.base_url);
  host_part_ = parsed.scheme_host_port;
  path_prefix_ = parsed.path_prefix;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
  }
}

HttpChatTransport::~HttpChatTransport() = default;

ChatResult HttpChatTransport::send(const ChatRequest& request) {
  ChatResult result;
  httplib::Client client(host_part_);
  client.set_connection_timeout(std::chrono::milliseconds(
      static_cast<int64_t>(timeout_seconds_ * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(static_cast<int64_t>(timeout_seconds_ * 1000)));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string body = request.to_body().dump();
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
  if (!res) {
    result.error = "transport error: " + httplib::to_string(res.error());
    result.retryable = true;
    return result;
  }
  result.status = res->status;
  if (res->status == 429 || res->status >= 500) {
    result.error = "HTTP " + std::to_string(res->status);
    result.retryable = true;
    return result;
  }
  if (res->status != 200) {
    result.error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    return result;
  }
  const json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
      !parsed["choices"][0].contains("message")) {
    result.error = "malformed completion response";
    return result;
  }
  result.content = parsed["choices"][0]["message"].value("content", "");
  result.ok = true;
  return result;
}

namespace {

class FixedMock final : public ChatTransport {
 public:
  explicit FixedMock(std::string text) : text_(std::move(text)) {}
  ChatResult send(const ChatRequest&) override {
    return ChatResult{true, 200, text_, "", false};
  }
  std::string describe() const override { return "mock://fixed"; }

 private:
  std::string text_;
};

// Role-aware generator: question prompts get a deterministic question
// derived from the chunk, everything else gets a deterministic multi
// sentence answer. Keeps CLI dry runs self-contained.
class QaMock final : public ChatTransport {
 public:
  ChatResult send(const ChatRequest& request) override {
    std::string system;
    std::string user;
    for (const ChatMessage& m : request.messages) {
      if (m.role == "system") system = m.content;
      else user += m.content;
    }
    const std::string tag = fingerprint128(user).hex().substr(0, 8);
    ChatResult r;
    r.ok = true;
    r.status = 200;
    if (system.find("generates just one question") != std::string::npos) {
      r.content = "What does passage " + tag + " tell us about local culture and daily life?";
    } else {
      r.content = "Drawing on the material at hand (ref " + tag +
                  "), the passage points to a regional tradition and explains how it shapes "
                  "everyday customs in the area.";
    }
    return r;
  }
  std::string describe() const override { return "mock://qa"; }
};

class LetterMock final : public ChatTransport {
 public:
  explicit LetterMock(std::string letter) : letter_(std::move(letter)) {}
  ChatResult send(const ChatRequest&) override {
    return ChatResult{true, 200, letter_, "", false};
  }
  std::string describe() const override { return "mock://letter"; }

 private:
  std::string letter_;
};

}  // namespace

std::unique_ptr<ChatTransport> make_mock_transport(const std::string& url) {
  std::string name = url.substr(std::string("mock://").size());
  if (const size_t q = name.find('?'); q != std::string::npos) name = name.substr(0, q);
  if (name.empty() || name == "fixed")
    return std::make_unique<FixedMock>(query_param(url, "text", "OK, this is a fixed mock response."));
  if (name == "qa") return std::make_unique<QaMock>();
  if (name == "letter") return std::make_unique<LetterMock>(query_param(url, "value", "A"));
  throw EndpointError("unknown mock endpoint: " + url);
}

std::unique_ptr<ChatTransport> make_transport(const EndpointConfig& config) {
  if (config.base_url.rfind("mock://", 0) == 0) return make_mock_transport(config.base_url);
  return std::make_unique<HttpChatTransport>(config);
}

RateLimiter::RateLimiter(uint32_t per_minute, ClockFn clock, SleepFn sleep)
    : per_minute_(per_minute),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleep_(sleep ? std::move(sleep)
                   : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

void RateLimiter::acquire() {
  if (per_minute_ == 0) return;
  using namespace std::chrono;
  while (true) {
    milliseconds wait{0};
    {
      std::lock_guard lock(mu_);
      const TimePoint now = clock_();
      while (!issued_.empty() && now - issued_.front() >= minutes(1)) issued_.pop_front();
      if (issued_.size() < per_minute_) {
        issued_.push_back(now);
        return;
      }
      wait = duration_cast<milliseconds>(issued_.front() + minutes(1) - now) + milliseconds(1);
    }
    sleep_(wait);
  }
}

ChatEndpoint::ChatEndpoint(EndpointConfig config, std::unique_ptr<ChatTransport> transport,
                           RateLimiter::SleepFn sleep, RateLimiter::ClockFn clock)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      limiter_(config_.requests_per_minute, clock, sleep),
      sleep_(sleep ? std::move(sleep)
                   : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (config_.max_concurrent_requests < 1)
    throw EndpointError("max_concurrent_requests must be >= 1");
  if (config_.retry.max_attempts < 1) throw EndpointError("max_attempts must be >= 1");
}

void ChatEndpoint::acquire_slot() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return slots_in_use_ < config_.max_concurrent_requests; });
  ++slots_in_use_;
}

void ChatEndpoint::release_slot() {
  {
    std::lock_guard lock(slot_mu_);
    --slots_in_use_;
  }
  slot_cv_.notify_one();
}

ChatResult ChatEndpoint::chat(const std::string& system_text, const std::string& user_text) {
  ChatRequest request;
  request.model = config_.model_name;
  if (!system_text.empty()) request.messages.push_back({"system", system_text});
  request.messages.push_back({"user", user_text});
  request.sampling = config_.sampling;

  ChatResult result;
  for (uint32_t attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      retries_.fetch_add(1);
      const uint32_t doublings = std::min(attempt - 2, 20u);
      const double backoff =
          config_.retry.backoff_base_seconds * static_cast<double>(1ull << doublings);
      sleep_(std::chrono::milliseconds(static_cast<int64_t>(backoff * 1000)));
    }
    acquire_slot();
    limiter_.acquire();  // token taken right before the send so issue times are honest
    requests_sent_.fetch_add(1);
    result = transport_->send(request);
    release_slot();
    if (result.ok || !result.retryable) return result;
  }
  return result;
}

void ChatEndpoint::probe() {
  const ChatResult r = chat("", "ping");
  if (r.ok) return;
  if (r.status == 401 || r.status == 403)
    throw EndpointError("endpoint auth failure at " + transport_->describe() + ": " + r.error);
  throw EndpointError("endpoint probe failed at " + transport_->describe() + ": " + r.error);
}

}  // namespace craft
