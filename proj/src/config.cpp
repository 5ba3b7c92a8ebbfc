#include "craft/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>

#include "craft/text.hpp"

namespace craft {

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    const std::string item = trim(value.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "yes" || value == "1" || value == "on") return true;
  if (value == "false" || value == "no" || value == "0" || value == "off") return false;
  throw ConfigError(where + ": expected a boolean, got \"" + value + "\"");
}

uint64_t parse_u64(const std::string& value, const std::string& where) {
  uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(where + ": expected an integer, got \"" + value + "\"");
  return out;
}

double parse_f64(const std::string& value, const std::string& where) {
  try {
    size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got \"" + value + "\"");
  }
}

using Setter = std::function<void(AppConfig&, const std::string& value, const std::string& where)>;

void set_endpoint_key(EndpointConfig& ep, const std::string& key, const std::string& value,
                      const std::string& where) {
  if (key == "base_url") ep.base_url = value;
  else if (key == "model") ep.model_name = value;
  else if (key == "api_key_env") ep.api_key_env = value;
  else if (key == "max_concurrent_requests") ep.max_concurrent_requests = static_cast<uint32_t>(parse_u64(value, where));
  else if (key == "requests_per_minute") ep.requests_per_minute = static_cast<uint32_t>(parse_u64(value, where));
  else if (key == "max_attempts") ep.retry.max_attempts = static_cast<uint32_t>(parse_u64(value, where));
  else if (key == "backoff_base_seconds") ep.retry.backoff_base_seconds = parse_f64(value, where);
  else if (key == "timeout_seconds") ep.timeout_seconds = parse_f64(value, where);
  else if (key == "sampling") {
    const json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
      throw ConfigError(where + ": expected a JSON object, got \"" + value + "\"");
    ep.sampling = parsed;
  } else throw ConfigError("unknown key " + where);
}

std::map<std::string, uint64_t> parse_target_pairs(const std::string& value,
                                                   const std::string& where) {
  std::map<std::string, uint64_t> out;
  for (const std::string& item : split_list(value)) {
    const size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError(where + ": expected region:count pairs, got \"" + item + "\"");
    out[trim(item.substr(0, colon))] = parse_u64(trim(item.substr(colon + 1)), where);
  }
  return out;
}

std::map<std::string, std::string> parse_name_pairs(const std::string& value,
                                                    const std::string& where) {
  std::map<std::string, std::string> out;
  for (const std::string& item : split_list(value)) {
    const size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError(where + ": expected id:name pairs, got \"" + item + "\"");
    out[trim(item.substr(0, colon))] = trim(item.substr(colon + 1));
  }
  return out;
}

bool apply_key(AppConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
  const std::string where = section + "." + key;

  if (section == "extract") {
    auto& e = cfg.extract;
    if (key == "sources") e.sources = split_list(value);
    else if (key == "lexicons") e.lexicons = split_list(value);
    else if (key == "output_dir") e.output_dir = value;
    else if (key == "max_tokens") e.max_tokens = static_cast<uint32_t>(parse_u64(value, where));
    else if (key == "min_distinct") e.min_distinct = static_cast<uint32_t>(parse_u64(value, where));
    else if (key == "workers") e.workers = static_cast<uint32_t>(parse_u64(value, where));
    else if (key == "dedup") e.dedup = value;
    else if (key == "stable_order") e.stable_order = parse_bool(value, where);
    else if (key == "text_field") e.text_field = value;
    else if (key == "compression") e.compression = value;
    else if (key == "output_compression") e.output_compression = value;
    else if (key == "min_keywords") e.min_keywords = parse_u64(value, where);
    else if (key == "allow_small_lexicon") e.allow_small_lexicon = parse_bool(value, where);
    else if (key == "targets") e.targets = parse_target_pairs(value, where);
    else if (key == "token_counter") e.token_counter = value;
    else if (key == "vocab_path") e.vocab_path = value;
    else if (key == "queue_capacity") e.queue_capacity = parse_u64(value, where);
    else return false;
    return true;
  }
  if (section == "question_endpoint" || section == "answer_endpoint" ||
      section == "eval_endpoint") {
    EndpointConfig& ep = section == "question_endpoint" ? cfg.question_endpoint
                         : section == "answer_endpoint" ? cfg.answer_endpoint
                                                        : cfg.eval_endpoint;
    set_endpoint_key(ep, key, value, where);
    return true;
  }
  if (section == "generate") {
    auto& g = cfg.generate;
    if (key == "mode") g.mode = value;
    else if (key == "limit") g.limit = parse_u64(value, where);
    else if (key == "stable_order") g.stable_order = parse_bool(value, where);
    else if (key == "min_answer_chars") g.min_answer_chars = parse_u64(value, where);
    else if (key == "require_question_mark") g.require_question_mark = parse_bool(value, where);
    else if (key == "region_names") g.region_names = parse_name_pairs(value, where);
    else return false;
    return true;
  }
  if (section == "mix") {
    auto& m = cfg.mix;
    if (key == "general_source") m.general_source = value;
    else if (key == "cultural_source") m.cultural_source = value;
    else if (key == "general_count") m.general_count = parse_u64(value, where);
    else if (key == "cultural_count") m.cultural_count = parse_u64(value, where);
    else if (key == "seed") m.seed = parse_u64(value, where);
    else if (key == "shuffle_output") m.shuffle_output = parse_bool(value, where);
    else if (key == "allow_short") m.allow_short = parse_bool(value, where);
    else return false;
    return true;
  }
  if (section == "sweep") {
    auto& s = cfg.sweep;
    if (key == "step") s.step = parse_u64(value, where);
    else if (key == "max_cultural") s.max_cultural = parse_u64(value, where);
    else return false;
    return true;
  }
  if (section == "eval") {
    auto& ev = cfg.eval;
    if (key == "dataset") ev.dataset = value;
    else if (key == "templates_dir") ev.templates_dir = value;
    else if (key == "out") ev.out = value;
    else if (key == "response_log") ev.response_log = value;
    else if (key == "concurrency") ev.concurrency = static_cast<uint32_t>(parse_u64(value, where));
    else return false;
    return true;
  }
  if (section == "log") {
    if (key == "level") cfg.log_level = value;
    else if (key == "output_root") cfg.output_root = value;
    else return false;
    return true;
  }
  return false;
}

json endpoint_json(const EndpointConfig& ep) {
  return json{{"base_url", ep.base_url},
              {"model", ep.model_name},
              {"api_key_env", ep.api_key_env},
              {"max_concurrent_requests", ep.max_concurrent_requests},
              {"requests_per_minute", ep.requests_per_minute},
              {"max_attempts", ep.retry.max_attempts},
              {"backoff_base_seconds", ep.retry.backoff_base_seconds},
              {"timeout_seconds", ep.timeout_seconds},
              {"sampling", ep.sampling}};
}

}  // namespace

json AppConfig::to_json() const {
  return json{
      {"extract",
       {{"sources", extract.sources},
        {"lexicons", extract.lexicons},
        {"output_dir", extract.output_dir},
        {"max_tokens", extract.max_tokens},
        {"min_distinct", extract.min_distinct},
        {"workers", extract.workers},
        {"dedup", extract.dedup},
        {"stable_order", extract.stable_order},
        {"text_field", extract.text_field},
        {"compression", extract.compression},
        {"output_compression", extract.output_compression},
        {"min_keywords", extract.min_keywords},
        {"allow_small_lexicon", extract.allow_small_lexicon},
        {"targets", extract.targets},
        {"token_counter", extract.token_counter},
        {"vocab_path", extract.vocab_path},
        {"queue_capacity", extract.queue_capacity}}},
      {"question_endpoint", endpoint_json(question_endpoint)},
      {"answer_endpoint", endpoint_json(answer_endpoint)},
      {"eval_endpoint", endpoint_json(eval_endpoint)},
      {"generate",
       {{"mode", generate.mode},
        {"limit", generate.limit},
        {"stable_order", generate.stable_order},
        {"min_answer_chars", generate.min_answer_chars},
        {"require_question_mark", generate.require_question_mark},
        {"region_names", generate.region_names}}},
      {"mix",
       {{"general_source", mix.general_source},
        {"cultural_source", mix.cultural_source},
        {"general_count", mix.general_count},
        {"cultural_count", mix.cultural_count},
        {"seed", mix.seed},
        {"shuffle_output", mix.shuffle_output},
        {"allow_short", mix.allow_short}}},
      {"sweep", {{"step", sweep.step}, {"max_cultural", sweep.max_cultural}}},
      {"eval",
       {{"dataset", eval.dataset},
        {"templates_dir", eval.templates_dir},
        {"out", eval.out},
        {"response_log", eval.response_log},
        {"concurrency", eval.concurrency}}},
      {"log", {{"level", log_level}, {"output_root", output_root}}}};
}

std::string AppConfig::digest() const {
  Fnv128 d;
  d.update(to_json().dump());
  return "fnv1a128:" + d.hex();
}

AppConfig load_config(const std::string& path, bool strict,
                      std::vector<std::string>* warnings) {
  AppConfig cfg;
  if (path.empty()) {
    validate_config(cfg);
    return cfg;
  }

  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  std::string section;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (section.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside any [section]");
    if (!apply_key(cfg, section, key, value)) {
      const std::string msg = "unknown config key [" + section + "] " + key;
      if (strict) throw ConfigError(msg + " (strict mode)");
      if (warnings) warnings->push_back(msg);
    }
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const AppConfig& cfg) {
  if (cfg.extract.max_tokens < 1) throw ConfigError("extract.max_tokens must be >= 1");
  if (cfg.extract.workers < 1) throw ConfigError("extract.workers must be >= 1");
  if (cfg.extract.queue_capacity < 1) throw ConfigError("extract.queue_capacity must be >= 1");
  dedup_mode_from_name(cfg.extract.dedup);
  compression_from_name(cfg.extract.compression);
  compression_from_name(cfg.extract.output_compression);
  token_counter_mode_from_name(cfg.extract.token_counter);
  gen_mode_from_name(cfg.generate.mode);
  for (const auto* ep : {&cfg.question_endpoint, &cfg.answer_endpoint, &cfg.eval_endpoint}) {
    if (ep->max_concurrent_requests < 1)
      throw ConfigError("endpoint.max_concurrent_requests must be >= 1");
    if (ep->retry.max_attempts < 1) throw ConfigError("endpoint.max_attempts must be >= 1");
    if (ep->timeout_seconds <= 0) throw ConfigError("endpoint.timeout_seconds must be > 0");
  }
  if (cfg.eval.concurrency < 1) throw ConfigError("eval.concurrency must be >= 1");
  if (cfg.sweep.step < 1) throw ConfigError("sweep.step must be >= 1");
  if (cfg.log_level != "debug" && cfg.log_level != "info" && cfg.log_level != "warn" &&
      cfg.log_level != "error")
    throw ConfigError("log.level must be debug, info, warn or error");
}

EndpointConfig load_endpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open endpoint file: " + path);
  EndpointConfig ep;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';' || stripped[0] == '[')
      continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    set_endpoint_key(ep, key, value, "endpoint." + key);
  }
  return ep;
}

void write_run_record(const std::string& path, const std::string& command,
                      const AppConfig& config, const json& stats, double duration_seconds) {
  const json record{{"command", command},
                    {"config_digest", config.digest()},
                    {"resolved_config", config.to_json()},
                    {"stats", stats},
                    {"duration_seconds", duration_seconds},
                    {"created_at", iso8601_utc_now()}};
  write_file(path, record.dump(2) + "\n");
}

}  // namespace craft
