#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "craft/chunker.hpp"
#include "craft/evalharness.hpp"
#include "craft/generate.hpp"
#include "craft/lexicon.hpp"
#include "craft/matcher.hpp"
#include "craft/mixer.hpp"
#include "craft/pipeline.hpp"
#include "craft/text.hpp"

namespace py = pybind11;
using namespace craft;

namespace {

TokenCounter make_counter(const std::string& mode, const std::string& vocab_path) {
  TokenCounterSpec spec;
  spec.mode = token_counter_mode_from_name(mode);
  spec.vocab_path = vocab_path;
  return TokenCounter::make(spec);
}

}  // namespace

PYBIND11_MODULE(_craft, m) {
  m.doc() = "Core operations of the craft corpus-to-dataset toolchain";

  py::class_<Chunk>(m, "Chunk")
      .def_readonly("doc_id", &Chunk::doc_id)
      .def_readonly("chunk_index", &Chunk::chunk_index)
      .def_readonly("text", &Chunk::text)
      .def_readonly("token_count", &Chunk::token_count)
      .def_readonly("byte_start", &Chunk::byte_start)
      .def_readonly("byte_end", &Chunk::byte_end)
      .def("__repr__", [](const Chunk& c) {
        return "Chunk(doc_id='" + c.doc_id + "', index=" + std::to_string(c.chunk_index) +
               ", tokens=" + std::to_string(c.token_count) + ")";
      });

  py::class_<KeywordHit>(m, "KeywordHit")
      .def_readonly("keyword", &KeywordHit::keyword)
      .def_readonly("byte_offset", &KeywordHit::byte_offset)
      .def_readonly("byte_len", &KeywordHit::byte_len);

  py::class_<Lexicon>(m, "Lexicon")
      .def_readonly("region_id", &Lexicon::region_id)
      .def_property_readonly("keywords", [](const Lexicon& l) { return l.keywords; })
      .def_property_readonly("case_insensitive",
                             [](const Lexicon& l) { return l.policy.case_insensitive; })
      .def_property_readonly("word_boundary",
                             [](const Lexicon& l) { return l.policy.word_boundary; });

  py::class_<KeywordMatcher>(m, "KeywordMatcher")
      .def(py::init<const Lexicon&>())
      .def("find_hits", [](const KeywordMatcher& m_, const std::string& text) {
        return m_.find_hits(text);
      });

  m.def(
      "count_tokens",
      [](const std::string& text, const std::string& mode, const std::string& vocab_path) {
        return make_counter(mode, vocab_path).count(text);
      },
      py::arg("text"), py::arg("mode") = "whitespace_punct", py::arg("vocab_path") = "");

  m.def(
      "chunk_text",
      [](const std::string& text, uint32_t max_tokens, const std::string& doc_id,
         const std::string& mode, const std::string& vocab_path) {
        return chunk_text(doc_id, text, max_tokens, make_counter(mode, vocab_path));
      },
      py::arg("text"), py::arg("max_tokens") = kDefaultMaxTokens, py::arg("doc_id") = "doc",
      py::arg("mode") = "whitespace_punct", py::arg("vocab_path") = "");

  m.def(
      "load_lexicon",
      [](const std::string& path, const std::string& region_id, size_t min_size,
         bool allow_small) {
        LexiconLoadOptions opts;
        opts.min_size = min_size;
        opts.allow_small = allow_small;
        return load_lexicon(path, region_id, opts);
      },
      py::arg("path"), py::arg("region_id") = "", py::arg("min_size") = kLexiconMinSize,
      py::arg("allow_small") = false);

  m.def(
      "make_lexicon",
      [](const std::string& region_id, const std::vector<std::string>& keywords,
         bool case_insensitive, bool word_boundary) {
        Lexicon lex;
        lex.region_id = region_id;
        lex.policy.case_insensitive = case_insensitive;
        lex.policy.word_boundary = word_boundary;
        std::set<std::string> normalized;
        for (const auto& k : keywords) {
          std::string n = normalize_keyword(k, lex.policy);
          if (!n.empty()) normalized.insert(std::move(n));
        }
        lex.keywords.assign(normalized.begin(), normalized.end());
        return lex;
      },
      py::arg("region_id"), py::arg("keywords"), py::arg("case_insensitive") = true,
      py::arg("word_boundary") = true);

  m.def(
      "distinct_keywords",
      [](const std::vector<KeywordHit>& hits) {
        std::set<std::string> distinct;
        for (const auto& h : hits) distinct.insert(h.keyword);
        return std::vector<std::string>(distinct.begin(), distinct.end());
      },
      py::arg("hits"));

  m.def("normalize_text", [](const std::string& s) { return normalize_text(s); });
  m.def("dedup_key", [](const std::string& text) { return dedup_key(text).hex(); });

  m.def(
      "make_question_prompt",
      [](const std::string& region_name, const std::string& chunk) {
        const RenderedPrompt p = make_question_prompt(region_name, chunk);
        return py::make_tuple(p.system_text, p.user_text);
      },
      py::arg("region_name"), py::arg("chunk_text"));

  m.def(
      "make_answer_prompt",
      [](const std::string& question, const py::object& context) {
        const RenderedPrompt p =
            context.is_none()
                ? make_answer_prompt(question, std::nullopt)
                : make_answer_prompt(question,
                                     std::optional<std::string_view>(context.cast<std::string>()));
        return py::make_tuple(p.system_text, p.user_text);
      },
      py::arg("question"), py::arg("context") = py::none());

  m.def(
      "validate_qa",
      [](const std::string& question, const std::string& answer, size_t min_answer_chars,
         bool require_question_mark) {
        InstructionRecord rec;
        rec.question = question;
        rec.answer = answer;
        ValidatePolicy policy;
        policy.min_answer_chars = min_answer_chars;
        policy.require_question_mark = require_question_mark;
        const ValidationResult v = validate_record(rec, policy);
        return py::make_tuple(v.accepted, v.reason);
      },
      py::arg("question"), py::arg("answer"), py::arg("min_answer_chars") = 20,
      py::arg("require_question_mark") = false);

  m.def(
      "parse_choice",
      [](const std::string& response, const py::object& options) -> py::object {
        std::optional<uint32_t> parsed;
        if (py::isinstance<py::int_>(options))
          parsed = parse_choice(response, options.cast<uint32_t>());
        else
          parsed = parse_choice(response, options.cast<std::vector<std::string>>());
        if (!parsed) return py::none();
        return py::int_(*parsed);
      },
      py::arg("response"), py::arg("options"));

  m.def(
      "render_eval_prompt",
      [](const std::string& question, const std::vector<std::string>& options,
         size_t template_index) {
        EvalItem item;
        item.question = question;
        item.options = options;
        return render_eval_prompt(item, TemplatePack::builtin(), template_index);
      },
      py::arg("question"), py::arg("options"), py::arg("template_index") = 0);

  m.def(
      "seeded_sample",
      [](uint64_t pool_size, uint64_t k, uint64_t seed) {
        auto rng = make_rng(seed, kCulturalDrawTag);
        return sample_prefix(pool_size, k, rng);
      },
      py::arg("pool_size"), py::arg("k"), py::arg("seed"));

  m.def(
      "run_extraction",
      [](const std::vector<std::string>& sources, const std::vector<Lexicon>& lexicons,
         const std::string& output_dir, uint32_t max_tokens, uint32_t min_distinct,
         uint32_t workers, bool stable_order, const std::string& dedup,
         const std::string& text_field) {
        ExtractionConfig config;
        for (const auto& s : sources) config.sources.push_back({s, Compression::auto_detect, text_field});
        config.lexicons = lexicons;
        config.output_dir = output_dir;
        config.max_tokens = max_tokens;
        config.min_distinct = min_distinct;
        config.workers = workers;
        config.stable_order = stable_order;
        config.dedup = dedup_mode_from_name(dedup);
        const RunStats stats = run_extraction(config);
        py::module_ json_mod = py::module_::import("json");
        return json_mod.attr("loads")(stats.to_json().dump());
      },
      py::arg("sources"), py::arg("lexicons"), py::arg("output_dir"),
      py::arg("max_tokens") = kDefaultMaxTokens, py::arg("min_distinct") = kMinDistinctKeywords,
      py::arg("workers") = 2, py::arg("stable_order") = false, py::arg("dedup") = "exact_hash",
      py::arg("text_field") = "text");

  m.def(
      "mix_datasets",
      [](const std::string& general_source, const std::string& cultural_source,
         uint64_t general_count, uint64_t cultural_count, uint64_t seed,
         const std::string& output_path, bool shuffle_output, bool allow_short) {
        MixSpec spec;
        spec.general_source = general_source;
        spec.cultural_source = cultural_source;
        spec.general_count = general_count;
        spec.cultural_count = cultural_count;
        spec.seed = seed;
        spec.output_path = output_path;
        spec.shuffle_output = shuffle_output;
        spec.allow_short = allow_short;
        const MixManifest manifest = mix_datasets(spec);
        py::module_ json_mod = py::module_::import("json");
        return json_mod.attr("loads")(manifest.to_json().dump());
      },
      py::arg("general_source"), py::arg("cultural_source"),
      py::arg("general_count") = kDefaultGeneralCount,
      py::arg("cultural_count") = kDefaultCulturalCount, py::arg("seed") = 0,
      py::arg("output_path") = "mix.jsonl", py::arg("shuffle_output") = true,
      py::arg("allow_short") = false);

  m.attr("MAX_TOKENS_DEFAULT") = kDefaultMaxTokens;
  m.attr("MIN_DISTINCT_DEFAULT") = kMinDistinctKeywords;
  m.attr("LEXICON_MIN_SIZE_DEFAULT") = kLexiconMinSize;
  m.attr("__version__") = "0.1.0";
}
