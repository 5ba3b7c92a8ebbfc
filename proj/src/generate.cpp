#include "craft/generate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <mutex>
#include <thread>

#include "craft/text.hpp"

namespace craft {

namespace {

const char* kQuestionSystem =
    "You are a chatbot who always generates just one question about {region} from the given "
    "context. Do not generate the answer.";
const char* kAnswerSystem = "Please answer the following question.";

bool is_slot_name(std::string_view name) {
  return name == "region" || name == "context" || name == "question" || name == "options";
}

}  // namespace

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  size_t pos = 0;
  while (pos < tmpl.size()) {
    const size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(open));
      break;
    }
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    if (is_slot_name(name)) {
      const auto it = slots.find(std::string(name));
      if (it == slots.end())
        throw TemplateError("unfilled template slot {" + std::string(name) + "}");
      out.append(it->second);
    } else {
      out.append(tmpl.substr(open, close - open + 1));  // literal braces
    }
    pos = close + 1;
  }
  return out;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl,
                             const std::map<std::string, std::string>& slots) {
  return RenderedPrompt{render_template(tmpl.role_preamble, slots),
                        render_template(tmpl.user_body, slots)};
}

RenderedPrompt make_question_prompt(std::string_view region_name, std::string_view chunk_text) {
  if (trim(chunk_text).empty()) throw TemplateError("cannot build a question prompt from an empty chunk");
  PromptTemplate tmpl{kQuestionSystem, "{context}"};
  return render_prompt(tmpl, {{"region", std::string(region_name)},
                              {"context", std::string(chunk_text)}});
}

RenderedPrompt make_answer_prompt(std::string_view question,
                                  std::optional<std::string_view> context) {
  if (trim(question).empty()) throw TemplateError("cannot build an answer prompt from an empty question");
  PromptTemplate tmpl{kAnswerSystem, context ? "{context}\n\n{question}" : "{question}"};
  std::map<std::string, std::string> slots{{"question", std::string(question)}};
  if (context) slots.emplace("context", std::string(*context));
  return render_prompt(tmpl, slots);
}

std::string answer_mode_name(AnswerMode mode) {
  return mode == AnswerMode::context_dependent ? "context_dependent" : "context_free";
}

AnswerMode answer_mode_from_name(std::string_view name) {
  if (name == "context_dependent") return AnswerMode::context_dependent;
  if (name == "context_free") return AnswerMode::context_free;
  throw std::runtime_error("unknown answer mode: " + std::string(name));
}

GenMode gen_mode_from_name(std::string_view name) {
  if (name == "cd" || name == "context_dependent") return GenMode::context_dependent;
  if (name == "cf" || name == "context_free") return GenMode::context_free;
  if (name == "both") return GenMode::both;
  throw std::runtime_error("unknown generation mode: " + std::string(name));
}

json InstructionRecord::to_json() const {
  return json{{"record_id", record_id},
              {"region_id", region_id},
              {"question", question},
              {"answer", answer},
              {"answer_mode", answer_mode_name(answer_mode)},
              {"source", {{"doc_id", doc_id}, {"chunk_index", chunk_index}}},
              {"generator", {{"question_model", question_model}, {"answer_model", answer_model}}},
              {"created_at", created_at}};
}

InstructionRecord InstructionRecord::from_json(const json& j) {
  InstructionRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.region_id = j.at("region_id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.answer = j.at("answer").get<std::string>();
  r.answer_mode = answer_mode_from_name(j.at("answer_mode").get<std::string>());
  r.doc_id = j.at("source").at("doc_id").get<std::string>();
  r.chunk_index = j.at("source").at("chunk_index").get<uint32_t>();
  r.question_model = j.at("generator").at("question_model").get<std::string>();
  r.answer_model = j.at("generator").at("answer_model").get<std::string>();
  r.created_at = j.value("created_at", "");
  return r;
}

namespace {

size_t codepoint_count(std::string_view s) {
  size_t n = 0;
  size_t pos = 0;
  while (pos < s.size()) {
    decode_utf8(s, pos);
    ++n;
  }
  return n;
}

}  // namespace

ValidationResult validate_record(const InstructionRecord& record, const ValidatePolicy& policy) {
  const std::string question = trim(record.question);
  const std::string answer = trim(record.answer);
  if (question.empty()) return {false, "empty_question"};
  if (answer.empty()) return {false, "empty_answer"};
  if (normalize_text(answer) == normalize_text(question)) return {false, "echo"};
  if (codepoint_count(answer) < policy.min_answer_chars) return {false, "too_short"};
  if (policy.require_question_mark && question.back() != '?') return {false, "no_question_mark"};
  return {true, ""};
}

std::map<std::string, std::string> default_region_names() {
  return {{"sg", "Singapore"}, {"ph", "the Philippines"}, {"us", "the United States"}};
}

json GenStats::to_json() const {
  return json{{"chunks_in", chunks_in},
              {"records_emitted", records_emitted},
              {"question_failures", question_failures},
              {"answer_failures", answer_failures},
              {"validation_rejects", validation_rejects},
              {"retries", retries},
              {"requests_sent", requests_sent}};
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

GenStats generate_batch(const std::vector<CandidateChunk>& candidates,
                        ChatEndpoint& question_endpoint, ChatEndpoint& answer_endpoint,
                        const GenOptions& options,
                        const std::function<void(const InstructionRecord&)>& emit) {
  if (options.probe) {
    question_endpoint.probe();
    answer_endpoint.probe();
  }

  const size_t total = options.limit > 0
                           ? std::min<size_t>(candidates.size(), options.limit)
                           : candidates.size();

  GenStats stats;
  stats.chunks_in = total;

  std::vector<AnswerMode> modes;
  if (options.mode == GenMode::context_dependent || options.mode == GenMode::both)
    modes.push_back(AnswerMode::context_dependent);
  if (options.mode == GenMode::context_free || options.mode == GenMode::both)
    modes.push_back(AnswerMode::context_free);

  std::atomic<size_t> next{0};
  std::atomic<uint64_t> question_failures{0};
  std::atomic<uint64_t> answer_failures{0};
  std::atomic<uint64_t> validation_rejects{0};
  std::atomic<uint64_t> records_emitted{0};

  std::mutex emit_mu;
  struct Keyed {
    size_t ordinal;
    size_t mode_rank;
    InstructionRecord record;
  };
  std::vector<Keyed> buffered;  // stable-order mode only

  auto handle_record = [&](size_t ordinal, size_t mode_rank, InstructionRecord rec) {
    const ValidationResult v = validate_record(rec, options.validation);
    if (!v.accepted) {
      validation_rejects.fetch_add(1);
      return;
    }
    records_emitted.fetch_add(1);
    std::lock_guard lock(emit_mu);
    if (options.stable_order)
      buffered.push_back({ordinal, mode_rank, std::move(rec)});
    else
      emit(rec);
  };

  auto region_name = [&](const std::string& region_id) {
    const auto it = options.region_names.find(region_id);
    return it != options.region_names.end() ? it->second : region_id;
  };

  auto work = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= total) return;
      const CandidateChunk& cand = candidates[i];

      RenderedPrompt qp;
      try {
        qp = make_question_prompt(region_name(cand.region_id), cand.chunk.text);
      } catch (const TemplateError&) {
        question_failures.fetch_add(1);
        continue;
      }
      const ChatResult qr = question_endpoint.chat(qp.system_text, qp.user_text);
      const std::string question = qr.ok ? trim(qr.content) : "";
      if (question.empty()) {
        question_failures.fetch_add(1);
        continue;
      }

      for (size_t m = 0; m < modes.size(); ++m) {
        const AnswerMode mode = modes[m];
        const auto context = mode == AnswerMode::context_dependent
                                 ? std::optional<std::string_view>(cand.chunk.text)
                                 : std::nullopt;
        const RenderedPrompt ap = make_answer_prompt(question, context);
        const ChatResult ar = answer_endpoint.chat(ap.system_text, ap.user_text);
        if (!ar.ok || trim(ar.content).empty()) {
          answer_failures.fetch_add(1);
          continue;
        }
        InstructionRecord rec;
        rec.record_id = "r" + std::to_string(i) + (mode == AnswerMode::context_dependent ? "-cd" : "-cf");
        rec.region_id = cand.region_id;
        rec.question = question;
        rec.answer = trim(ar.content);
        rec.answer_mode = mode;
        rec.doc_id = cand.chunk.doc_id;
        rec.chunk_index = cand.chunk.chunk_index;
        rec.question_model = question_endpoint.config().model_name;
        rec.answer_model = answer_endpoint.config().model_name;
        rec.created_at = iso8601_utc_now();
        handle_record(i, m, std::move(rec));
      }
    }
  };

  const uint32_t pool = std::max(question_endpoint.config().max_concurrent_requests,
                                 answer_endpoint.config().max_concurrent_requests);
  std::vector<std::thread> threads;
  const size_t nthreads = std::min<size_t>(std::max<uint32_t>(pool, 1), std::max<size_t>(total, 1));
  for (size_t t = 0; t < nthreads; ++t) threads.emplace_back(work);
  for (std::thread& t : threads) t.join();

  if (options.stable_order) {
    std::sort(buffered.begin(), buffered.end(), [](const Keyed& a, const Keyed& b) {
      if (a.ordinal != b.ordinal) return a.ordinal < b.ordinal;
      return a.mode_rank < b.mode_rank;
    });
    for (const Keyed& k : buffered) emit(k.record);
  }

  stats.question_failures = question_failures.load();
  stats.answer_failures = answer_failures.load();
  stats.validation_rejects = validation_rejects.load();
  stats.records_emitted = records_emitted.load();
  stats.retries = question_endpoint.retries() + answer_endpoint.retries();
  stats.requests_sent = question_endpoint.requests_sent() + answer_endpoint.requests_sent();
  return stats;
}

}  // namespace craft
