#include <doctest.h>

#include <set>
#include <thread>

#include "craft/generate.hpp"
#include "testutil.hpp"

using namespace craft;
using testutil::ScriptedTransport;

namespace {

CandidateChunk make_candidate(const std::string& doc_id, uint32_t index, const std::string& text,
                              const std::string& region = "sg") {
  CandidateChunk c;
  c.chunk.doc_id = doc_id;
  c.chunk.chunk_index = index;
  c.chunk.text = text;
  c.chunk.token_count = 4;
  c.region_id = region;
  c.distinct_keywords = {"merlion", "orchard road"};
  c.hit_count = 2;
  return c;
}

ChatEndpoint make_endpoint(ScriptedTransport::Handler handler, ScriptedTransport** out = nullptr,
                           uint32_t concurrency = 4, uint32_t max_attempts = 3) {
  EndpointConfig config;
  config.base_url = "mock://scripted";
  config.model_name = "mock-model";
  config.max_concurrent_requests = concurrency;
  config.retry.max_attempts = max_attempts;
  config.retry.backoff_base_seconds = 0.0;
  auto transport = std::make_unique<ScriptedTransport>(std::move(handler));
  if (out) *out = transport.get();
  return ChatEndpoint(config, std::move(transport), [](std::chrono::milliseconds) {});
}

const std::string kLongAnswer =
    "This is a sufficiently long mock answer that passes validation easily.";

bool is_question_request(const ChatRequest& r) {
  return !r.messages.empty() &&
         r.messages[0].content.find("generates just one question") != std::string::npos;
}

}  // namespace

TEST_SUITE("generate") {

TEST_CASE("question prompt uses the fixed instruction verbatim") {
  const RenderedPrompt p = make_question_prompt("Singapore", "Merlion Park opened in 1972.");
  CHECK(p.system_text ==
        "You are a chatbot who always generates just one question about Singapore from the given "
        "context. Do not generate the answer.");
  CHECK(p.user_text == "Merlion Park opened in 1972.");

  SUBCASE("region name substitutes cleanly") {
    const RenderedPrompt ph = make_question_prompt("the Philippines", "Jeepneys are common.");
    CHECK(ph.system_text ==
          "You are a chatbot who always generates just one question about the Philippines from "
          "the given context. Do not generate the answer.");
  }
  SUBCASE("empty chunk is an error") {
    CHECK_THROWS_AS(make_question_prompt("Singapore", "  "), TemplateError);
  }
}

TEST_CASE("answer prompt composes context and question") {
  const RenderedPrompt with = make_answer_prompt("What is the Merlion?", std::optional<std::string_view>("Some context."));
  CHECK(with.system_text == "Please answer the following question.");
  CHECK(with.user_text == "Some context.\n\nWhat is the Merlion?");

  const RenderedPrompt without = make_answer_prompt("What is the Merlion?", std::nullopt);
  CHECK(without.user_text == "What is the Merlion?");

  CHECK_THROWS_AS(make_answer_prompt("  ", std::nullopt), TemplateError);
}

TEST_CASE("prompt rendering is deterministic and brace-safe") {
  const std::string chunk = "Text with {braces} and {question} that stay literal.";
  const RenderedPrompt a = make_question_prompt("Singapore", chunk);
  const RenderedPrompt b = make_question_prompt("Singapore", chunk);
  CHECK(a.system_text == b.system_text);
  CHECK(a.user_text == b.user_text);
  CHECK(a.user_text == chunk);  // substituted values are never rescanned

  CHECK_THROWS_AS(render_template("needs {question} here", {}), TemplateError);
  CHECK(render_template("literal {unknown} stays", {}) == "literal {unknown} stays");
}

TEST_CASE("validation rules") {
  InstructionRecord rec;
  rec.question = "What is the Merlion?";
  rec.answer = kLongAnswer;
  CHECK(validate_record(rec).accepted);

  SUBCASE("empty answer") {
    rec.answer = "   ";
    CHECK(validate_record(rec).reason == "empty_answer");
  }
  SUBCASE("echo answer") {
    rec.answer = " what is  the MERLION? ";
    CHECK(validate_record(rec).reason == "echo");
  }
  SUBCASE("short answer") {
    rec.answer = "Too short.";
    CHECK(validate_record(rec).reason == "too_short");
  }
  SUBCASE("question mark only under the strict flag") {
    rec.question = "Describe the Merlion";
    CHECK(validate_record(rec).accepted);
    ValidatePolicy strict;
    strict.require_question_mark = true;
    CHECK(validate_record(rec, strict).reason == "no_question_mark");
  }
  SUBCASE("multi-sentence answers accept") {
    rec.question = "How is the harvest festival celebrated, and in which month?";
    rec.answer = "The festival is traditionally celebrated in May. Towns stage processions "
                 "through the week, and families prepare shared meals for visitors.";
    CHECK(validate_record(rec).accepted);
  }
  SUBCASE("empty question") {
    rec.question = "";
    CHECK(validate_record(rec).reason == "empty_question");
  }
}

TEST_CASE("ten chunks in context-dependent mode yield ten records") {
  std::vector<CandidateChunk> candidates;
  for (int i = 0; i < 10; ++i)
    candidates.push_back(make_candidate("doc" + std::to_string(i), 0, "Chunk text " + std::to_string(i)));

  auto handler = [](const ChatRequest& r, uint64_t) {
    return testutil::ok_result(is_question_request(r) ? "Generated question?" : kLongAnswer);
  };
  ChatEndpoint q = make_endpoint(handler);
  ChatEndpoint a = make_endpoint(handler);

  std::vector<InstructionRecord> records;
  GenOptions options;
  options.mode = GenMode::context_dependent;
  const GenStats stats = generate_batch(candidates, q, a, options,
                                        [&](const InstructionRecord& r) { records.push_back(r); });
  CHECK(stats.chunks_in == 10);
  CHECK(stats.records_emitted == 10);
  CHECK(stats.question_failures == 0);
  CHECK(stats.answer_failures == 0);
  REQUIRE(records.size() == 10);
  for (const auto& r : records) {
    CHECK(r.answer_mode == AnswerMode::context_dependent);
    CHECK(r.question == "Generated question?");
    CHECK(r.question_model == "mock-model");
    CHECK(!r.created_at.empty());
  }
}

TEST_CASE("mode both yields two records per chunk sharing the question") {
  std::vector<CandidateChunk> candidates;
  for (int i = 0; i < 4; ++i)
    candidates.push_back(make_candidate("doc" + std::to_string(i), 0, "Body " + std::to_string(i)));

  ScriptedTransport* answer_log = nullptr;
  auto handler = [](const ChatRequest& r, uint64_t) {
    return testutil::ok_result(is_question_request(r) ? "Shared question?" : kLongAnswer);
  };
  ChatEndpoint q = make_endpoint(handler);
  ChatEndpoint a = make_endpoint(handler, &answer_log);

  std::vector<InstructionRecord> records;
  GenOptions options;
  options.mode = GenMode::both;
  options.stable_order = true;
  generate_batch(candidates, q, a, options,
                 [&](const InstructionRecord& r) { records.push_back(r); });
  REQUIRE(records.size() == 8);
  for (size_t i = 0; i < records.size(); i += 2) {
    CHECK(records[i].question == records[i + 1].question);
    CHECK(records[i].answer_mode == AnswerMode::context_dependent);
    CHECK(records[i + 1].answer_mode == AnswerMode::context_free);
    CHECK(records[i].record_id != records[i + 1].record_id);
  }

  SUBCASE("record ids are unique") {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.record_id);
    CHECK(ids.size() == records.size());
  }
}

TEST_CASE("context appears in answer requests iff context_dependent") {
  std::vector<CandidateChunk> candidates;
  for (int i = 0; i < 6; ++i)
    candidates.push_back(
        make_candidate("doc" + std::to_string(i), 0, "UNIQUE_CONTEXT_" + std::to_string(i)));

  ScriptedTransport* answers = nullptr;
  auto handler = [](const ChatRequest& r, uint64_t) {
    return testutil::ok_result(is_question_request(r) ? "One question?" : kLongAnswer);
  };
  ChatEndpoint q = make_endpoint(handler);
  ChatEndpoint a = make_endpoint(handler, &answers);

  GenOptions options;
  options.mode = GenMode::both;
  std::vector<InstructionRecord> records;
  generate_batch(candidates, q, a, options,
                 [&](const InstructionRecord& r) { records.push_back(r); });

  // Answer endpoint saw 2 requests per chunk plus one probe.
  const auto requests = answers->requests();
  size_t with_context = 0;
  size_t without_context = 0;
  for (const ChatRequest& r : requests) {
    if (r.messages.empty() || r.messages[0].content != "Please answer the following question.")
      continue;  // probe
    const std::string& user = r.messages.back().content;
    if (user.find("UNIQUE_CONTEXT_") != std::string::npos) ++with_context;
    else ++without_context;
  }
  CHECK(with_context == 6);
  CHECK(without_context == 6);
  for (const InstructionRecord& r : records) {
    // provenance stays intact
    CHECK(r.doc_id.rfind("doc", 0) == 0);
  }
}

TEST_CASE("429 twice then success produces the record with exact retry count") {
  std::vector<CandidateChunk> candidates{make_candidate("doc0", 0, "Body")};

  std::atomic<int> answer_failures_left{2};
  auto handler = [&](const ChatRequest& r, uint64_t) {
    if (is_question_request(r)) return testutil::ok_result("Q?");
    if (answer_failures_left.fetch_sub(1) > 0) return testutil::failure_result(429);
    return testutil::ok_result(kLongAnswer);
  };
  ChatEndpoint q = make_endpoint([](const ChatRequest&, uint64_t) {
    return testutil::ok_result("Q?");
  });
  ChatEndpoint a = make_endpoint(handler, nullptr, 4, 3);

  GenOptions options;
  options.mode = GenMode::context_dependent;
  options.probe = false;  // keep the scripted failure sequence exact
  std::vector<InstructionRecord> records;
  const GenStats stats = generate_batch(candidates, q, a, options,
                                        [&](const InstructionRecord& r) { records.push_back(r); });
  CHECK(records.size() == 1);
  CHECK(stats.retries == 2);
  CHECK(stats.answer_failures == 0);
}

TEST_CASE("exhausted retries drop the chunk and count it") {
  std::vector<CandidateChunk> candidates{make_candidate("doc0", 0, "Broken body"),
                                         make_candidate("doc1", 0, "Good body")};
  // chunk doc0's question request always gets a 500; doc1 succeeds
  ChatEndpoint q = make_endpoint(
      [](const ChatRequest& r, uint64_t) {
        return r.messages.back().content.find("Broken") != std::string::npos
                   ? testutil::failure_result(500)
                   : testutil::ok_result("Q?");
      },
      nullptr, 1, 2);
  ChatEndpoint a = make_endpoint(
      [](const ChatRequest&, uint64_t) { return testutil::ok_result(kLongAnswer); });

  GenOptions options;
  options.mode = GenMode::context_free;
  options.probe = false;
  std::vector<InstructionRecord> records;
  const GenStats stats = generate_batch(candidates, q, a, options,
                                        [&](const InstructionRecord& r) { records.push_back(r); });
  CHECK(stats.question_failures == 1);
  CHECK(records.size() == 1);
  CHECK(records[0].doc_id == "doc1");
}

TEST_CASE("validation rejections are counted and dropped") {
  std::vector<CandidateChunk> candidates{make_candidate("doc0", 0, "Body")};
  auto handler = [](const ChatRequest& r, uint64_t) {
    return testutil::ok_result(is_question_request(r) ? "Q?" : "short");
  };
  ChatEndpoint q = make_endpoint(handler);
  ChatEndpoint a = make_endpoint(handler);
  GenOptions options;
  options.mode = GenMode::context_dependent;
  std::vector<InstructionRecord> records;
  const GenStats stats = generate_batch(candidates, q, a, options,
                                        [&](const InstructionRecord& r) { records.push_back(r); });
  CHECK(records.empty());
  CHECK(stats.validation_rejects == 1);
}

TEST_CASE("probe failure is fatal before any chunk work") {
  std::vector<CandidateChunk> candidates{make_candidate("doc0", 0, "Body")};
  ChatEndpoint q = make_endpoint(
      [](const ChatRequest&, uint64_t) { return testutil::failure_result(401); }, nullptr, 4, 1);
  ChatEndpoint a = make_endpoint(
      [](const ChatRequest&, uint64_t) { return testutil::ok_result(kLongAnswer); });
  GenOptions options;
  CHECK_THROWS_AS(
      generate_batch(candidates, q, a, options, [](const InstructionRecord&) {}),
      EndpointError);
}

TEST_CASE("in-flight requests never exceed the endpoint cap") {
  std::vector<CandidateChunk> candidates;
  for (int i = 0; i < 24; ++i)
    candidates.push_back(make_candidate("doc" + std::to_string(i), 0, "Body " + std::to_string(i)));

  ScriptedTransport* qlog = nullptr;
  ScriptedTransport* alog = nullptr;
  auto handler = [](const ChatRequest& r, uint64_t) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return testutil::ok_result(is_question_request(r) ? "Q?" : kLongAnswer);
  };
  ChatEndpoint q = make_endpoint(handler, &qlog, 3);
  ChatEndpoint a = make_endpoint(handler, &alog, 2);

  GenOptions options;
  options.mode = GenMode::both;
  generate_batch(candidates, q, a, options, [](const InstructionRecord&) {});
  CHECK(qlog->max_in_flight() <= 3);
  CHECK(alog->max_in_flight() <= 2);
}

TEST_CASE("limit bounds the number of chunks processed") {
  std::vector<CandidateChunk> candidates;
  for (int i = 0; i < 10; ++i)
    candidates.push_back(make_candidate("doc" + std::to_string(i), 0, "Body"));
  auto handler = [](const ChatRequest& r, uint64_t) {
    return testutil::ok_result(is_question_request(r) ? "Q?" : kLongAnswer);
  };
  ChatEndpoint q = make_endpoint(handler);
  ChatEndpoint a = make_endpoint(handler);
  GenOptions options;
  options.mode = GenMode::context_dependent;
  options.limit = 3;
  std::vector<InstructionRecord> records;
  const GenStats stats = generate_batch(candidates, q, a, options,
                                        [&](const InstructionRecord& r) { records.push_back(r); });
  CHECK(stats.chunks_in == 3);
  CHECK(records.size() == 3);
}

}  // TEST_SUITE
