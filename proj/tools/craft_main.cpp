#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include "craft/config.hpp"

namespace fs = std::filesystem;
using craft::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int g_log_level = 1;  // 0=debug 1=info 2=warn 3=error

int level_from_name(const std::string& name) {
  if (name == "debug") return 0;
  if (name == "info") return 1;
  if (name == "warn") return 2;
  return 3;
}

void log_info(const std::string& msg) {
  if (g_log_level <= 1) std::cerr << "[craft] " << msg << "\n";
}

int fail(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
  return 1;
}

std::string region_from_path(const std::string& path) {
  return fs::path(path).stem().string();
}

struct Overrides {
  CLI::App* cmd = nullptr;

  template <class T>
  void apply(const std::string& flag, T& target, const T& parsed) const {
    if (cmd->count(flag) > 0) target = parsed;
  }
};

std::vector<craft::Lexicon> load_lexicons(const craft::ExtractSettings& settings) {
  if (settings.lexicons.empty()) throw craft::ConfigError("no lexicons configured");
  std::vector<craft::Lexicon> lexicons;
  craft::LexiconLoadOptions opts;
  opts.min_size = settings.min_keywords;
  opts.allow_small = settings.allow_small_lexicon;
  for (const std::string& path : settings.lexicons) {
    craft::LexiconLoadReport report;
    const std::string region =
        fs::path(path).extension() == ".json" ? "" : region_from_path(path);
    lexicons.push_back(craft::load_lexicon(path, region, opts, &report));
    for (const std::string& w : report.warnings) log_info("lexicon: " + w);
    log_info("loaded lexicon " + lexicons.back().region_id + " (" +
             std::to_string(lexicons.back().keywords.size()) + " keywords)");
  }
  return lexicons;
}

craft::ExtractionConfig to_extraction_config(const craft::AppConfig& cfg) {
  craft::ExtractionConfig ec;
  for (const std::string& src : cfg.extract.sources)
    ec.sources.push_back({src, craft::compression_from_name(cfg.extract.compression),
                          cfg.extract.text_field});
  ec.lexicons = load_lexicons(cfg.extract);
  ec.max_tokens = cfg.extract.max_tokens;
  ec.min_distinct = cfg.extract.min_distinct;
  ec.workers = cfg.extract.workers;
  ec.dedup = craft::dedup_mode_from_name(cfg.extract.dedup);
  ec.output_dir = cfg.extract.output_dir;
  ec.target_counts = cfg.extract.targets;
  ec.stable_order = cfg.extract.stable_order;
  ec.token_counter.mode = craft::token_counter_mode_from_name(cfg.extract.token_counter);
  ec.token_counter.vocab_path = cfg.extract.vocab_path;
  ec.output_compression = craft::compression_from_name(cfg.extract.output_compression);
  ec.queue_capacity = cfg.extract.queue_capacity;
  return ec;
}

std::vector<craft::CandidateChunk> read_candidates(const std::string& path) {
  craft::LineReader reader(craft::open_byte_source(path));
  std::vector<craft::CandidateChunk> out;
  std::string line;
  uint64_t lineno = 0;
  while (reader.next(line)) {
    ++lineno;
    if (craft::trim(line).empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded())
      throw craft::IoError(path + " line " + std::to_string(lineno) + ": bad JSON");
    out.push_back(craft::CandidateChunk::from_json(rec));
  }
  return out;
}

// Relative output paths land under [log] output_root.
std::string resolve_out(const craft::AppConfig& cfg, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute() || cfg.output_root.empty() || cfg.output_root == ".") return path;
  return (fs::path(cfg.output_root) / p).string();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_extract(craft::AppConfig cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.extract.output_dir = resolve_out(cfg, cfg.extract.output_dir);
  const craft::ExtractionConfig ec = to_extraction_config(cfg);
  const craft::RunStats stats = craft::run_extraction(ec);
  craft::write_run_record((fs::path(ec.output_dir) / "run_record.json").string(), "extract", cfg,
                          stats.to_json(), seconds_since(t0));
  std::cout << stats.to_json().dump(2) << "\n";
  return 0;
}

int run_generate(const craft::AppConfig& cfg, const std::string& candidates_path,
                 const std::string& out_arg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string out_path = resolve_out(cfg, out_arg);
  const auto candidates = read_candidates(candidates_path);
  log_info("generating from " + std::to_string(candidates.size()) + " candidate chunks");

  craft::ChatEndpoint question_ep(cfg.question_endpoint,
                                  craft::make_transport(cfg.question_endpoint));
  craft::ChatEndpoint answer_ep(cfg.answer_endpoint, craft::make_transport(cfg.answer_endpoint));

  craft::GenOptions options;
  options.mode = craft::gen_mode_from_name(cfg.generate.mode);
  options.limit = cfg.generate.limit;
  options.stable_order = cfg.generate.stable_order;
  options.validation.min_answer_chars = cfg.generate.min_answer_chars;
  options.validation.require_question_mark = cfg.generate.require_question_mark;
  options.region_names = cfg.generate.region_names;

  craft::JsonlWriter writer(out_path);
  const craft::GenStats stats = craft::generate_batch(
      candidates, question_ep, answer_ep, options,
      [&](const craft::InstructionRecord& rec) { writer.write(rec.to_json()); });
  writer.close();
  craft::write_run_record(out_path + ".run_record.json", "generate", cfg, stats.to_json(),
                          seconds_since(t0));
  std::cout << stats.to_json().dump(2) << "\n";
  return 0;
}

int run_mix(const craft::AppConfig& cfg, const std::string& spec_path, CLI::App* cmd,
            const std::string& out_path) {
  const auto t0 = std::chrono::steady_clock::now();
  craft::MixSpec spec;
  if (!spec_path.empty()) {
    spec = craft::MixSpec::from_json(json::parse(craft::read_file(spec_path)));
  } else {
    spec.general_source = cfg.mix.general_source;
    spec.cultural_source = cfg.mix.cultural_source;
    spec.general_count = cfg.mix.general_count;
    spec.cultural_count = cfg.mix.cultural_count;
    spec.seed = cfg.mix.seed;
    spec.shuffle_output = cfg.mix.shuffle_output;
    spec.allow_short = cfg.mix.allow_short;
  }
  if (cmd->count("--out") > 0 || spec.output_path.empty()) spec.output_path = out_path;
  spec.output_path = resolve_out(cfg, spec.output_path);
  const craft::MixManifest manifest = craft::mix_datasets(spec);
  craft::write_run_record(spec.output_path + ".run_record.json", "mix", cfg, manifest.to_json(),
                          seconds_since(t0));
  std::cout << manifest.to_json().dump(2) << "\n";
  return 0;
}

int run_sweep(const craft::AppConfig& cfg, const std::string& out_dir_arg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string out_dir = resolve_out(cfg, out_dir_arg);
  craft::MixSpec base;
  base.general_source = cfg.mix.general_source;
  base.cultural_source = cfg.mix.cultural_source;
  base.general_count = cfg.mix.general_count;
  base.seed = cfg.mix.seed;
  base.shuffle_output = cfg.mix.shuffle_output;
  base.allow_short = cfg.mix.allow_short;
  const auto manifests =
      craft::ratio_sweep(base, cfg.sweep.step, cfg.sweep.max_cultural, out_dir);
  json stats{{"points", manifests.size()}};
  craft::write_run_record((fs::path(out_dir) / "run_record.json").string(), "sweep", cfg, stats,
                          seconds_since(t0));
  std::cout << stats.dump(2) << "\n";
  return 0;
}

int run_eval(craft::AppConfig cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.eval.out = resolve_out(cfg, cfg.eval.out);
  cfg.eval.response_log = resolve_out(cfg, cfg.eval.response_log);
  const auto items = craft::load_eval_dataset(cfg.eval.dataset);
  const craft::TemplatePack templates = cfg.eval.templates_dir.empty()
                                            ? craft::TemplatePack::builtin()
                                            : craft::TemplatePack::load_dir(cfg.eval.templates_dir);
  craft::ChatEndpoint endpoint(cfg.eval_endpoint, craft::make_transport(cfg.eval_endpoint));
  craft::EvalOptions options;
  options.concurrency = cfg.eval.concurrency;
  options.response_log_path = cfg.eval.response_log;
  options.dataset_name = fs::path(cfg.eval.dataset).stem().string();
  const craft::EvalReport report = craft::evaluate(items, endpoint, templates, options);
  craft::write_file(cfg.eval.out, report.to_json().dump(2) + "\n");
  craft::write_run_record(cfg.eval.out + ".run_record.json", "eval", cfg, report.to_json(),
                          seconds_since(t0));
  std::cout << report.to_json().dump(2) << "\n";
  if (!report.valid) return fail("eval_aborted", report.error);
  return 0;
}

int run_stats(const std::string& run_dir) {
  const std::string path = (fs::path(run_dir) / "extract_stats.json").string();
  const craft::RunStats stats = craft::RunStats::from_json(json::parse(craft::read_file(path)));
  std::cout << stats.to_json().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"craft: mine culturally relevant text from large corpora, synthesize "
               "instruction/answer pairs, assemble hybrid datasets and score models on "
               "multiple-choice benchmarks"};
  app.set_version_flag("--version", std::string("craft ") + kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool lax = false;
  std::string log_level_flag;
  app.add_option("--config", config_path, "Path to the sectioned key/value config file")
      ->expected(1);
  app.add_flag("--lax", lax, "Warn on unknown config keys instead of failing");
  app.add_option("--log-level", log_level_flag, "debug, info, warn or error");

  // extract
  auto* extract = app.add_subcommand("extract", "Mine candidate chunks from corpus files");
  std::vector<std::string> x_sources, x_lexicons;
  std::string x_output_dir, x_dedup, x_text_field, x_compression, x_output_compression;
  uint32_t x_max_tokens = 0, x_min_distinct = 0, x_workers = 0;
  uint64_t x_min_keywords = 0;
  bool x_stable = false, x_allow_small = false;
  std::vector<std::string> x_targets;
  extract->add_option("--sources", x_sources, "Corpus files or directories");
  extract->add_option("--lexicons", x_lexicons, "Lexicon files (.txt or .json)");
  extract->add_option("--output-dir", x_output_dir, "Output directory");
  extract->add_option("--max-tokens", x_max_tokens, "Chunk budget in tokens");
  extract->add_option("--min-distinct", x_min_distinct, "Distinct keywords required to retain");
  extract->add_option("--workers", x_workers, "Worker thread count");
  extract->add_flag("--stable-order", x_stable, "Deterministic output order");
  extract->add_option("--dedup", x_dedup, "exact_hash or off");
  extract->add_option("--text-field", x_text_field, "JSON field holding document text");
  extract->add_option("--compression", x_compression, "Input compression: auto, none, gzip, zstd");
  extract->add_option("--output-compression", x_output_compression, "none or zstd");
  extract->add_option("--min-keywords", x_min_keywords, "Lexicon size floor");
  extract->add_flag("--allow-small-lexicon", x_allow_small, "Accept undersized lexicons");
  extract->add_option("--target", x_targets, "Per-region cap as region:count");

  // generate
  auto* generate = app.add_subcommand("generate", "Synthesize instruction/answer records");
  std::string g_candidates, g_out, g_mode, g_qurl, g_qmodel, g_aurl, g_amodel;
  uint64_t g_limit = 0;
  bool g_stable = false;
  generate->add_option("--candidates", g_candidates, "Candidate chunk JSONL")->required();
  generate->add_option("--out", g_out, "Output record JSONL")->required();
  generate->add_option("--mode", g_mode, "cd, cf or both");
  generate->add_option("--limit", g_limit, "Max chunks to process");
  generate->add_flag("--stable-order", g_stable, "Emit in input order");
  generate->add_option("--question-url", g_qurl, "Question endpoint base URL");
  generate->add_option("--question-model", g_qmodel, "Question model name");
  generate->add_option("--answer-url", g_aurl, "Answer endpoint base URL");
  generate->add_option("--answer-model", g_amodel, "Answer model name");

  // mix
  auto* mix = app.add_subcommand("mix", "Assemble a hybrid training dataset");
  std::string m_general, m_cultural, m_out, m_spec;
  uint64_t m_gcount = 0, m_ccount = 0, m_seed = 0;
  bool m_no_shuffle = false, m_allow_short = false;
  mix->add_option("--spec", m_spec, "JSON mix spec file");
  mix->add_option("--general", m_general, "General pool JSONL");
  mix->add_option("--cultural", m_cultural, "Cultural pool JSONL");
  mix->add_option("--general-count", m_gcount, "General records to sample");
  mix->add_option("--cultural-count", m_ccount, "Cultural records to sample");
  mix->add_option("--seed", m_seed, "Sampling seed");
  mix->add_option("--out", m_out, "Output JSONL path (overrides the spec file)");
  mix->add_flag("--no-shuffle", m_no_shuffle, "Concatenate instead of shuffling");
  mix->add_flag("--allow-short", m_allow_short, "Accept pools smaller than requested");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Mix once per cultural-count step");
  std::string s_general, s_cultural, s_out_dir;
  uint64_t s_gcount = 0, s_step = 0, s_max = 0, s_seed = 0;
  sweep->add_option("--general", s_general, "General pool JSONL");
  sweep->add_option("--cultural", s_cultural, "Cultural pool JSONL");
  sweep->add_option("--general-count", s_gcount, "General records per point");
  sweep->add_option("--step", s_step, "Cultural-count increment");
  sweep->add_option("--max", s_max, "Largest cultural count");
  sweep->add_option("--seed", s_seed, "Sampling seed");
  sweep->add_option("--out-dir", s_out_dir, "Directory for sweep outputs")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score an endpoint on a multiple-choice dataset");
  std::string e_dataset, e_templates, e_out, e_log, e_url, e_model, e_endpoint_file;
  uint32_t e_concurrency = 0;
  eval->add_option("--dataset", e_dataset, "Eval dataset JSONL")->required();
  eval->add_option("--templates", e_templates, "Template pack directory (default: built-in)");
  eval->add_option("--out", e_out, "Report JSON path");
  eval->add_option("--log", e_log, "Response log JSONL path");
  eval->add_option("--endpoint", e_endpoint_file, "Endpoint config file");
  eval->add_option("--endpoint-url", e_url, "Endpoint base URL");
  eval->add_option("--model", e_model, "Model name");
  eval->add_option("--concurrency", e_concurrency, "Parallel requests");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Print the stats of a finished extraction");
  std::string st_run;
  stats_cmd->add_option("--run", st_run, "Extraction output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::vector<std::string> warnings;
    craft::AppConfig cfg = craft::load_config(config_path, /*strict=*/!lax, &warnings);
    if (!log_level_flag.empty()) cfg.log_level = log_level_flag;
    g_log_level = level_from_name(cfg.log_level);
    for (const std::string& w : warnings) std::cerr << "[craft] warning: " << w << "\n";

    if (app.got_subcommand(extract)) {
      Overrides ov{extract};
      ov.apply("--sources", cfg.extract.sources, x_sources);
      ov.apply("--lexicons", cfg.extract.lexicons, x_lexicons);
      ov.apply("--output-dir", cfg.extract.output_dir, x_output_dir);
      ov.apply("--max-tokens", cfg.extract.max_tokens, x_max_tokens);
      ov.apply("--min-distinct", cfg.extract.min_distinct, x_min_distinct);
      ov.apply("--workers", cfg.extract.workers, x_workers);
      ov.apply("--dedup", cfg.extract.dedup, x_dedup);
      ov.apply("--text-field", cfg.extract.text_field, x_text_field);
      ov.apply("--compression", cfg.extract.compression, x_compression);
      ov.apply("--output-compression", cfg.extract.output_compression, x_output_compression);
      ov.apply("--min-keywords", cfg.extract.min_keywords, static_cast<size_t>(x_min_keywords));
      if (extract->count("--stable-order")) cfg.extract.stable_order = x_stable;
      if (extract->count("--allow-small-lexicon")) cfg.extract.allow_small_lexicon = x_allow_small;
      if (extract->count("--target")) {
        cfg.extract.targets.clear();
        for (const std::string& t : x_targets) {
          const size_t colon = t.find(':');
          if (colon == std::string::npos)
            throw craft::ConfigError("--target expects region:count, got " + t);
          cfg.extract.targets[t.substr(0, colon)] = std::stoull(t.substr(colon + 1));
        }
      }
      craft::validate_config(cfg);
      log_info("resolved config digest " + cfg.digest());
      return run_extract(cfg);
    }
    if (app.got_subcommand(generate)) {
      Overrides ov{generate};
      ov.apply("--mode", cfg.generate.mode, g_mode);
      ov.apply("--limit", cfg.generate.limit, g_limit);
      if (generate->count("--stable-order")) cfg.generate.stable_order = g_stable;
      ov.apply("--question-url", cfg.question_endpoint.base_url, g_qurl);
      ov.apply("--question-model", cfg.question_endpoint.model_name, g_qmodel);
      ov.apply("--answer-url", cfg.answer_endpoint.base_url, g_aurl);
      ov.apply("--answer-model", cfg.answer_endpoint.model_name, g_amodel);
      craft::validate_config(cfg);
      log_info("resolved config digest " + cfg.digest());
      return run_generate(cfg, g_candidates, g_out);
    }
    if (app.got_subcommand(mix)) {
      Overrides ov{mix};
      ov.apply("--general", cfg.mix.general_source, m_general);
      ov.apply("--cultural", cfg.mix.cultural_source, m_cultural);
      ov.apply("--general-count", cfg.mix.general_count, m_gcount);
      ov.apply("--cultural-count", cfg.mix.cultural_count, m_ccount);
      ov.apply("--seed", cfg.mix.seed, m_seed);
      if (mix->count("--no-shuffle")) cfg.mix.shuffle_output = !m_no_shuffle;
      if (mix->count("--allow-short")) cfg.mix.allow_short = m_allow_short;
      craft::validate_config(cfg);
      log_info("resolved config digest " + cfg.digest());
      return run_mix(cfg, m_spec, mix, m_out);
    }
    if (app.got_subcommand(sweep)) {
      Overrides ov{sweep};
      ov.apply("--general", cfg.mix.general_source, s_general);
      ov.apply("--cultural", cfg.mix.cultural_source, s_cultural);
      ov.apply("--general-count", cfg.mix.general_count, s_gcount);
      ov.apply("--seed", cfg.mix.seed, s_seed);
      ov.apply("--step", cfg.sweep.step, s_step);
      ov.apply("--max", cfg.sweep.max_cultural, s_max);
      craft::validate_config(cfg);
      log_info("resolved config digest " + cfg.digest());
      return run_sweep(cfg, s_out_dir);
    }
    if (app.got_subcommand(eval)) {
      Overrides ov{eval};
      if (eval->count("--endpoint") > 0)
        cfg.eval_endpoint = craft::load_endpoint_file(e_endpoint_file);
      ov.apply("--dataset", cfg.eval.dataset, e_dataset);
      ov.apply("--templates", cfg.eval.templates_dir, e_templates);
      ov.apply("--out", cfg.eval.out, e_out);
      ov.apply("--log", cfg.eval.response_log, e_log);
      ov.apply("--concurrency", cfg.eval.concurrency, e_concurrency);
      ov.apply("--endpoint-url", cfg.eval_endpoint.base_url, e_url);
      ov.apply("--model", cfg.eval_endpoint.model_name, e_model);
      craft::validate_config(cfg);
      log_info("resolved config digest " + cfg.digest());
      return run_eval(cfg);
    }
    if (app.got_subcommand(stats_cmd)) return run_stats(st_run);
    return 2;
  } catch (const craft::ConfigError& e) {
    return fail("config", e.what());
  } catch (const craft::LexiconError& e) {
    return fail("lexicon", e.what());
  } catch (const craft::EndpointError& e) {
    return fail("endpoint", e.what());
  } catch (const craft::MixError& e) {
    return fail("mix", e.what());
  } catch (const craft::EvalError& e) {
    return fail("eval", e.what());
  } catch (const craft::IoError& e) {
    return fail("io", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}
