#include <doctest.h>

#include <map>
#include <random>

#include "craft/evalharness.hpp"
#include "testutil.hpp"

using namespace craft;
using testutil::ScriptedTransport;
using testutil::TempDir;

namespace {

std::vector<EvalItem> make_items(size_t n, size_t options_per_item = 4, uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::vector<EvalItem> items;
  for (size_t i = 0; i < n; ++i) {
    EvalItem item;
    item.item_id = "q" + std::to_string(i);
    item.question = "Synthetic question number " + std::to_string(i) + "?";
    for (size_t o = 0; o < options_per_item; ++o)
      item.options.push_back("option " + std::to_string(i) + "-" + std::to_string(o));
    item.gold_index = static_cast<uint32_t>(rng() % options_per_item);
    items.push_back(std::move(item));
  }
  return items;
}

ChatEndpoint make_endpoint(ScriptedTransport::Handler handler, uint32_t concurrency = 4) {
  EndpointConfig config;
  config.base_url = "mock://scripted";
  config.model_name = "eval-mock";
  config.max_concurrent_requests = concurrency;
  config.retry.max_attempts = 1;
  return ChatEndpoint(config, std::make_unique<ScriptedTransport>(std::move(handler)),
                      [](std::chrono::milliseconds) {});
}

// Gold-aware handler: finds which item the prompt shows and answers with
// the gold letter (or a deterministically wrong letter).
ScriptedTransport::Handler gold_handler(const std::vector<EvalItem>& items, bool correct) {
  return [&items, correct](const ChatRequest& r, uint64_t) {
    const std::string& prompt = r.messages.back().content;
    for (const EvalItem& item : items) {
      if (prompt.find(item.question) == std::string::npos) continue;
      const uint32_t gold = item.gold_index;
      const uint32_t pick =
          correct ? gold : (gold + 1) % static_cast<uint32_t>(item.options.size());
      return testutil::ok_result(std::string(1, static_cast<char>('A' + pick)) + ".");
    }
    return testutil::ok_result("Z");
  };
}

}  // namespace

TEST_SUITE("evalharness") {

TEST_CASE("option block lines are lettered and identical across templates") {
  EvalItem item;
  item.question = "Which landmark guards the bay?";
  item.options = {"The Merlion", "A lighthouse", "A bridge", "A ferris wheel"};
  item.gold_index = 0;
  const TemplatePack pack = TemplatePack::builtin();

  const std::string p0 = render_eval_prompt(item, pack, 0);
  CHECK(p0.find("A. The Merlion") != std::string::npos);
  CHECK(p0.find("B. A lighthouse") != std::string::npos);
  CHECK(p0.find("C. A bridge") != std::string::npos);
  CHECK(p0.find("D. A ferris wheel") != std::string::npos);
  CHECK(p0.find("E.") == std::string::npos);

  const std::string block = option_block(item);
  for (size_t t = 0; t < pack.size(); ++t) {
    const std::string p = render_eval_prompt(item, pack, t);
    CHECK(p.find(block) != std::string::npos);  // byte-identical option block
    CHECK(p.find(item.question) != std::string::npos);
  }
  CHECK(render_eval_prompt(item, pack, 0) != render_eval_prompt(item, pack, 3));

  SUBCASE("two-option items stop at B") {
    item.options = {"yes", "no"};
    const std::string p = render_eval_prompt(item, pack, 0);
    CHECK(p.find("A. yes") != std::string::npos);
    CHECK(p.find("B. no") != std::string::npos);
    CHECK(p.find("C.") == std::string::npos);
  }
  SUBCASE("out-of-range template index") {
    CHECK_THROWS_AS(render_eval_prompt(item, pack, 5), EvalError);
  }
}

TEST_CASE("template pack files round trip against the builtin pack") {
  const TemplatePack from_files = TemplatePack::load_dir(std::string(TEST_DATA_DIR) +
                                                         "/templates/eval");
  const TemplatePack builtin = TemplatePack::builtin();
  for (size_t i = 0; i < kEvalTemplateCount; ++i) CHECK(from_files.at(i) == builtin.at(i));
}

TEST_CASE("choice parsing precedence") {
  CHECK(parse_choice("The answer is B.", 4) == 1);
  CHECK(parse_choice("b) because it fits", 4) == 1);
  CHECK(parse_choice("I am not sure.", 4) == std::nullopt);
  CHECK(parse_choice("A", 4) == 0);
  CHECK(parse_choice("  c:", 4) == 2);
  CHECK(parse_choice("Broadway", 4) == std::nullopt);       // no standalone letter
  CHECK(parse_choice("answer: D", 4) == 3);
  CHECK(parse_choice("E is best", 4) == std::nullopt);      // out of range for 4 options
  CHECK(parse_choice("E is best", 6) == 4);
  CHECK(parse_choice("", 4) == std::nullopt);
  CHECK(parse_choice("pick (a) here", 4) == 0);

  SUBCASE("containment fallback") {
    const std::vector<std::string> options = {"the merlion statue", "jeepney", "route sixty six"};
    CHECK(parse_choice("it must be the Jeepney variant", options) == 1);
    CHECK(parse_choice("the merlion statue... or jeepney", options) == std::nullopt);  // ambiguous
    CHECK(parse_choice("no clue", options) == std::nullopt);
    // letter rule still wins over containment
    CHECK(parse_choice("B, the jeepney", options) == 1);
  }
  SUBCASE("fewer than two options is a caller error") {
    CHECK_THROWS_AS(parse_choice("A", 1), EvalError);
  }
}

TEST_CASE("gold oracle scores a perfect run") {
  const auto items = make_items(20);
  ChatEndpoint endpoint = make_endpoint(gold_handler(items, true));
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  CHECK(report.valid);
  CHECK(report.mean_accuracy == 1.0);
  CHECK(report.stddev == 0.0);
  CHECK(report.items_unparsed == 0);
  CHECK(report.items_total == 20);
  REQUIRE(report.per_template_accuracy.size() == 5);
  for (const double a : report.per_template_accuracy) CHECK(a == 1.0);
}

TEST_CASE("always-wrong oracle scores zero") {
  const auto items = make_items(10);
  ChatEndpoint endpoint = make_endpoint(gold_handler(items, false));
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  CHECK(report.mean_accuracy == 0.0);
  CHECK(report.stddev == 0.0);
}

TEST_CASE("uniform random letters land near chance") {
  const auto items = make_items(400);
  std::mutex mu;
  std::mt19937_64 rng(99);
  auto handler = [&](const ChatRequest&, uint64_t) {
    std::lock_guard lock(mu);
    return testutil::ok_result(std::string(1, static_cast<char>('A' + rng() % 4)));
  };
  ChatEndpoint endpoint = make_endpoint(handler);
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  CHECK(report.mean_accuracy > 0.25 - 0.045);
  CHECK(report.mean_accuracy < 0.25 + 0.045);
}

TEST_CASE("template-sensitive mock isolates one template") {
  const auto items = make_items(15);
  // Template 2's builtin phrasing is unique: "pick the most suitable option".
  auto handler = [&](const ChatRequest& r, uint64_t) -> ChatResult {
    const std::string& prompt = r.messages.back().content;
    const bool is_t2 = prompt.find("pick the most suitable option") != std::string::npos;
    for (const EvalItem& item : items) {
      if (prompt.find(item.question) == std::string::npos) continue;
      const uint32_t wrong = (item.gold_index + 1) % static_cast<uint32_t>(item.options.size());
      const uint32_t pick = is_t2 ? item.gold_index : wrong;
      return testutil::ok_result(std::string(1, static_cast<char>('A' + pick)));
    }
    return testutil::ok_result("Z");
  };
  ChatEndpoint endpoint = make_endpoint(handler);
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  const std::vector<double> expected{0.0, 0.0, 1.0, 0.0, 0.0};
  CHECK(report.per_template_accuracy == expected);
  CHECK(report.mean_accuracy == doctest::Approx(0.2));
}

TEST_CASE("unparsed responses score as incorrect and are counted") {
  const auto items = make_items(8);
  auto handler = [](const ChatRequest&, uint64_t) {
    return testutil::ok_result("no idea whatsoever");
  };
  ChatEndpoint endpoint = make_endpoint(handler);
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  CHECK(report.mean_accuracy == 0.0);
  CHECK(report.items_unparsed == 8 * 5);
}

TEST_CASE("response log supports an exact recount") {
  TempDir tmp;
  const auto items = make_items(12);
  ChatEndpoint endpoint = make_endpoint(gold_handler(items, true));
  EvalOptions options;
  options.response_log_path = tmp.file("responses.jsonl");
  options.dataset_name = "fixture";
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin(), options);

  LineReader reader(open_byte_source(tmp.file("responses.jsonl")));
  std::string line;
  uint64_t lines = 0;
  std::map<uint32_t, uint64_t> correct_per_template;
  while (reader.next(line)) {
    ++lines;
    const json e = json::parse(line);
    for (const char* key : {"item_id", "template_index", "raw_response", "parsed_index", "correct"})
      CHECK(e.contains(key));
    if (e["correct"].get<bool>()) ++correct_per_template[e["template_index"].get<uint32_t>()];
  }
  CHECK(lines == 12 * 5);  // completeness
  for (size_t t = 0; t < 5; ++t) {
    const double recount =
        static_cast<double>(correct_per_template[static_cast<uint32_t>(t)]) / 12.0;
    CHECK(recount == report.per_template_accuracy[t]);  // scoring identity
  }
}

TEST_CASE("endpoint failure aborts with an invalid report") {
  const auto items = make_items(5);
  auto handler = [](const ChatRequest&, uint64_t ordinal) {
    return ordinal < 3 ? testutil::ok_result("A") : testutil::failure_result(500);
  };
  ChatEndpoint endpoint = make_endpoint(handler, 1);
  const EvalReport report = evaluate(items, endpoint, TemplatePack::builtin());
  CHECK_FALSE(report.valid);
  CHECK(!report.error.empty());
}

TEST_CASE("dataset loader validates items") {
  TempDir tmp;
  testutil::write_lines(
      tmp.file("ds.jsonl"),
      {R"({"question":"Pick one","options":["a","b","c"],"answer_index":2,"id":"x"})",
       R"({"question":"Second","options":["y","n"],"answer_index":0})"});
  const auto items = load_eval_dataset(tmp.file("ds.jsonl"));
  REQUIRE(items.size() == 2);
  CHECK(items[0].item_id == "x");
  CHECK(items[0].gold_index == 2);
  CHECK(items[1].item_id == "item-1");

  SUBCASE("gold index out of range") {
    testutil::write_lines(tmp.file("bad.jsonl"),
                          {R"({"question":"q","options":["a","b"],"answer_index":2})"});
    CHECK_THROWS_AS(load_eval_dataset(tmp.file("bad.jsonl")), EvalError);
  }
  SUBCASE("duplicate options rejected") {
    testutil::write_lines(tmp.file("dup.jsonl"),
                          {R"({"question":"q","options":["a","a"],"answer_index":0})"});
    CHECK_THROWS_AS(load_eval_dataset(tmp.file("dup.jsonl")), EvalError);
  }
  SUBCASE("empty dataset rejected") {
    write_file(tmp.file("none.jsonl"), "");
    CHECK_THROWS_AS(load_eval_dataset(tmp.file("none.jsonl")), EvalError);
  }
}

}  // TEST_SUITE
