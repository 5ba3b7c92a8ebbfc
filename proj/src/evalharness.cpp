#include "craft/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "craft/generate.hpp"
#include "craft/text.hpp"

namespace craft {

namespace fs = std::filesystem;

std::vector<EvalItem> load_eval_dataset(const std::string& path) {
  LineReader reader(open_byte_source(path));
  std::vector<EvalItem> items;
  std::string line;
  uint64_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    const std::string where = path + " line " + std::to_string(lineno);
    if (rec.is_discarded() || !rec.is_object()) throw EvalError("bad JSON at " + where);
    EvalItem item;
    if (!rec.contains("question") || !rec["question"].is_string())
      throw EvalError("missing question at " + where);
    if (!rec.contains("options") || !rec["options"].is_array())
      throw EvalError("missing options at " + where);
    if (!rec.contains("answer_index") || !rec["answer_index"].is_number_integer())
      throw EvalError("missing answer_index at " + where);
    item.question = rec["question"].get<std::string>();
    for (const auto& opt : rec["options"]) {
      if (!opt.is_string()) throw EvalError("non-string option at " + where);
      item.options.push_back(opt.get<std::string>());
    }
    const int64_t gold = rec["answer_index"].get<int64_t>();
    if (item.options.size() < 2 || item.options.size() > 6)
      throw EvalError("need 2..6 options at " + where);
    if (std::set<std::string>(item.options.begin(), item.options.end()).size() !=
        item.options.size())
      throw EvalError("duplicate options at " + where);
    if (gold < 0 || static_cast<size_t>(gold) >= item.options.size())
      throw EvalError("answer_index out of range at " + where);
    item.gold_index = static_cast<uint32_t>(gold);
    item.item_id = rec.contains("id") && rec["id"].is_string()
                       ? rec["id"].get<std::string>()
                       : "item-" + std::to_string(items.size());
    items.push_back(std::move(item));
  }
  if (items.empty()) throw EvalError("dataset is empty: " + path);
  return items;
}

namespace {

const std::array<const char*, kEvalTemplateCount> kBuiltinTemplates = {
    "Answer the following multiple-choice question. Reply with the letter of the best option "
    "only.\n\n{question}\n\n{options}\n\nAnswer:",

    "Choose the best answer to the question below. Respond with a single letter.\n\nQuestion: "
    "{question}\n\nOptions:\n{options}\n\nYour choice:",

    "Read the question and pick the most suitable option. Output only the option "
    "letter.\n\n{question}\n\n{options}",

    "Which option best answers this question? Give just the letter.\n\nQ: "
    "{question}\n\n{options}\n\nLetter:",

    "Select the correct choice for the question. Answer using only its "
    "letter.\n\n{question}\n\nChoices:\n{options}\n\nAnswer with the letter:"};

void check_template(const std::string& tmpl, const std::string& name) {
  if (tmpl.find("{question}") == std::string::npos)
    throw EvalError("template " + name + " does not reference {question}");
  if (tmpl.find("{options}") == std::string::npos)
    throw EvalError("template " + name + " does not reference {options}");
}

}  // namespace

TemplatePack::TemplatePack(std::array<std::string, kEvalTemplateCount> templates)
    : templates_(std::move(templates)) {
  for (size_t i = 0; i < templates_.size(); ++i)
    check_template(templates_[i], std::to_string(i));
}

TemplatePack TemplatePack::builtin() {
  std::array<std::string, kEvalTemplateCount> t;
  for (size_t i = 0; i < kEvalTemplateCount; ++i) t[i] = kBuiltinTemplates[i];
  return TemplatePack(std::move(t));
}

TemplatePack TemplatePack::load_dir(const std::string& dir) {
  std::array<std::string, kEvalTemplateCount> t;
  for (size_t i = 0; i < kEvalTemplateCount; ++i) {
    const std::string path = (fs::path(dir) / ("template_" + std::to_string(i) + ".txt")).string();
    t[i] = read_file(path);
    while (!t[i].empty() && (t[i].back() == '\n' || t[i].back() == '\r')) t[i].pop_back();
  }
  return TemplatePack(std::move(t));
}

const std::string& TemplatePack::at(size_t index) const {
  if (index >= templates_.size())
    throw EvalError("template index out of range: " + std::to_string(index));
  return templates_[index];
}

std::string option_block(const EvalItem& item) {
  std::string block;
  for (size_t i = 0; i < item.options.size(); ++i) {
    if (i > 0) block += "\n";
    block += static_cast<char>('A' + i);
    block += ". ";
    block += item.options[i];
  }
  return block;
}

std::string render_eval_prompt(const EvalItem& item, const TemplatePack& templates,
                               size_t template_index) {
  return render_template(templates.at(template_index),
                         {{"question", item.question}, {"options", option_block(item)}});
}

std::optional<uint32_t> parse_choice(std::string_view response, uint32_t n_options) {
  if (n_options < 2) throw EvalError("parse_choice needs at least 2 options");
  auto is_alnum = [](char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
  };
  // 1) first standalone option letter
  for (size_t i = 0; i < response.size(); ++i) {
    const char c = response[i];
    if (!std::isalpha(static_cast<unsigned char>(c))) continue;
    const uint32_t idx = static_cast<uint32_t>(std::toupper(static_cast<unsigned char>(c)) - 'A');
    if (idx >= n_options) continue;
    if (i > 0 && is_alnum(response[i - 1])) continue;
    size_t j = i + 1;
    if (j < response.size() && (response[j] == ')' || response[j] == '.' || response[j] == ':'))
      ++j;
    if (j < response.size() && is_alnum(response[j])) continue;
    return idx;
  }
  return std::nullopt;
}

std::optional<uint32_t> parse_choice(std::string_view response,
                                     const std::vector<std::string>& options) {
  const auto by_letter = parse_choice(response, static_cast<uint32_t>(options.size()));
  if (by_letter) return by_letter;
  // 2) unique option-text containment
  const std::string folded = fold_case(response);
  std::optional<uint32_t> found;
  for (size_t i = 0; i < options.size(); ++i) {
    if (folded.find(fold_case(options[i])) != std::string::npos) {
      if (found) return std::nullopt;  // ambiguous
      found = static_cast<uint32_t>(i);
    }
  }
  return found;
}

json ResponseLogEntry::to_json() const {
  json j{{"item_id", item_id},
         {"template_index", template_index},
         {"raw_response", raw_response},
         {"correct", correct}};
  if (parsed_index)
    j["parsed_index"] = *parsed_index;
  else
    j["parsed_index"] = nullptr;
  return j;
}

json EvalReport::to_json() const {
  return json{{"dataset_name", dataset_name},
              {"model_name", model_name},
              {"per_template_accuracy", per_template_accuracy},
              {"mean_accuracy", mean_accuracy},
              {"stddev", stddev},
              {"items_total", items_total},
              {"items_unparsed", items_unparsed},
              {"valid", valid},
              {"error", error}};
}

EvalReport evaluate(const std::vector<EvalItem>& items, ChatEndpoint& endpoint,
                    const TemplatePack& templates, const EvalOptions& options) {
  if (items.empty()) throw EvalError("cannot evaluate an empty dataset");

  EvalReport report;
  report.dataset_name = options.dataset_name;
  report.model_name =
      options.model_name.empty() ? endpoint.config().model_name : options.model_name;
  report.items_total = items.size();

  std::vector<ResponseLogEntry> log(items.size() * templates.size());
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mu;

  for (size_t t = 0; t < templates.size() && !failed.load(); ++t) {
    std::atomic<size_t> next{0};
    auto work = [&] {
      while (!failed.load()) {
        const size_t i = next.fetch_add(1);
        if (i >= items.size()) return;
        const EvalItem& item = items[i];
        const std::string prompt = render_eval_prompt(item, templates, t);
        const ChatResult r = endpoint.chat("", prompt);
        if (!r.ok) {
          std::lock_guard lock(error_mu);
          if (!failed.exchange(true)) first_error = r.error;
          return;
        }
        ResponseLogEntry entry;
        entry.item_id = item.item_id;
        entry.template_index = static_cast<uint32_t>(t);
        entry.raw_response = r.content;
        entry.parsed_index = parse_choice(r.content, item.options);
        entry.correct = entry.parsed_index && *entry.parsed_index == item.gold_index;
        log[t * items.size() + i] = std::move(entry);
      }
    };
    const size_t nthreads =
        std::min<size_t>(std::max<uint32_t>(options.concurrency, 1), items.size());
    std::vector<std::thread> threads;
    for (size_t w = 0; w < nthreads; ++w) threads.emplace_back(work);
    for (std::thread& w : threads) w.join();
  }

  if (!options.response_log_path.empty()) {
    JsonlWriter writer(options.response_log_path);
    for (const ResponseLogEntry& e : log)
      if (!e.item_id.empty()) writer.write(e.to_json());
    writer.close();
  }

  if (failed.load()) {
    report.valid = false;
    report.error = "endpoint failure mid-run: " + first_error;
    return report;
  }

  report.per_template_accuracy.resize(templates.size(), 0.0);
  for (size_t t = 0; t < templates.size(); ++t) {
    uint64_t correct = 0;
    for (size_t i = 0; i < items.size(); ++i) {
      const ResponseLogEntry& e = log[t * items.size() + i];
      if (e.correct) ++correct;
      if (!e.parsed_index) ++report.items_unparsed;
    }
    report.per_template_accuracy[t] =
        static_cast<double>(correct) / static_cast<double>(items.size());
  }
  double mean = 0.0;
  for (const double a : report.per_template_accuracy) mean += a;
  mean /= static_cast<double>(report.per_template_accuracy.size());
  double var = 0.0;
  for (const double a : report.per_template_accuracy) var += (a - mean) * (a - mean);
  var /= static_cast<double>(report.per_template_accuracy.size());
  report.mean_accuracy = mean;
  report.stddev = std::sqrt(var);
  return report;
}

}  // namespace craft
